// SPDX-License-Identifier: Apache-2.0

//! The autoregressive scoring contract, training-sample construction, and a
//! reference n-gram scorer.

mod ngram;
mod samples;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::text::{self, TokenId};

pub use ngram::{NgramConfig, NgramScorer};
pub use samples::{
    build_training_samples, build_unsupervised_samples, char_trigram_overlap, load_pairs, mix_samples, SampleConfig,
    ViewRatio,
};

/// Which identifier view the scorer is asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewPrefix {
    #[serde(rename = "title")]
    Title,
    #[serde(rename = "substring")]
    Substring,
    #[serde(rename = "pseudo-query")]
    PseudoQuery,
}

impl ViewPrefix {
    pub const ALL: [ViewPrefix; 3] = [ViewPrefix::Title, ViewPrefix::Substring, ViewPrefix::PseudoQuery];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewPrefix::Title => "title",
            ViewPrefix::Substring => "substring",
            ViewPrefix::PseudoQuery => "pseudo-query",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Token that closes an identifier of this view. For substrings this is
    /// the body end delimiter, used as a stop symbol.
    pub fn close_token(self) -> TokenId {
        match self {
            ViewPrefix::Title => text::TITLE_END,
            ViewPrefix::Substring => text::BODY_END,
            ViewPrefix::PseudoQuery => text::QUERY_END,
        }
    }

    /// Delimiter that anchors generation, if the view is anchored.
    pub fn open_token(self) -> Option<TokenId> {
        match self {
            ViewPrefix::Title => Some(text::TITLE_START),
            ViewPrefix::Substring => None,
            ViewPrefix::PseudoQuery => Some(text::QUERY_START),
        }
    }

    /// Parses a comma-separated list such as `title,substring`.
    pub fn parse_list(s: &str) -> Result<Vec<ViewPrefix>, Error> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let v: ViewPrefix = part.parse()?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty view list".into()));
        }
        out.sort();
        Ok(out)
    }
}

impl fmt::Display for ViewPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewPrefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "title" => Ok(ViewPrefix::Title),
            "substring" => Ok(ViewPrefix::Substring),
            "pseudo-query" => Ok(ViewPrefix::PseudoQuery),
            other => Err(Error::InvalidArgument(format!("unknown view {other:?}"))),
        }
    }
}

/// `(view prefix; query) -> target identifier` with the passage it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSample {
    pub prefix: ViewPrefix,
    /// Normalized query words.
    pub query_tokens: Vec<String>,
    pub target_tokens: Vec<TokenId>,
    pub passage_id: String,
}

/// What the scorer conditions on when asked for the next token.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub view: ViewPrefix,
    pub query: &'a [String],
    /// Identifier tokens emitted so far.
    pub output: &'a [TokenId],
}

/// An autoregressive model over identifier tokens.
pub trait Scorer: Send + Sync {
    /// Log-probability of each candidate as the next output token. Values
    /// must be finite; they need not be normalized over `candidates`.
    fn log_probs(&self, context: &ScoringContext<'_>, candidates: &[TokenId]) -> Vec<f64>;
}

/// Scores every candidate equally.
#[derive(Debug, Default, Clone, Copy)]
pub struct UniformScorer;

impl Scorer for UniformScorer {
    fn log_probs(&self, _: &ScoringContext<'_>, candidates: &[TokenId]) -> Vec<f64> {
        vec![0.0; candidates.len()]
    }
}
