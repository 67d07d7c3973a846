// SPDX-License-Identifier: Apache-2.0

//! Passage scoring from generated identifiers: a passage's score is the sum
//! of the transformed scores of the predicted identifiers it contains.
//! Within one passage, overlapping substring matches count once: the
//! highest-scoring prediction keeps the span.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;

use crate::decoder::{Prediction, ViewPredictions};
use crate::error::{Error, Result};
use crate::fm_index::FmIndex;
use crate::scorer::ViewPrefix;
use crate::text::{self, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransformMode {
    /// `exp(lp / L^e)` for an identifier of `L` tokens.
    LengthNormalizedExp,
    /// The log-score itself.
    Raw,
}

impl FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "length-normalized-exp" => Ok(TransformMode::LengthNormalizedExp),
            "raw" => Ok(TransformMode::Raw),
            other => Err(Error::InvalidArgument(format!("unknown score transform {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTransform {
    pub mode: TransformMode,
    /// Exponent `e` on the identifier length.
    pub length_exponent: f64,
    /// Multipliers indexed by [`ViewPrefix::index`].
    pub view_weights: [f64; 3],
}

impl Default for ScoreTransform {
    fn default() -> Self {
        Self {
            mode: TransformMode::LengthNormalizedExp,
            length_exponent: 1.0,
            view_weights: [1.0; 3],
        }
    }
}

impl ScoreTransform {
    pub fn apply(&self, prediction: &Prediction) -> f64 {
        let w = self.view_weights[prediction.view.index()];
        let s = match self.mode {
            TransformMode::LengthNormalizedExp => {
                let len = prediction.tokens.len().max(1) as f64;
                (prediction.score / len.powf(self.length_exponent)).exp()
            }
            TransformMode::Raw => prediction.score,
        };
        w * s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveredEntry {
    pub prediction: Prediction,
    /// Half-open token spans of the identifier content within the passage stream.
    pub spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveredSet {
    pub passage_id: String,
    pub entries: Vec<CoveredEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub passage_id: String,
    pub score: f64,
}

/// Passages by non-increasing score, ties by ascending id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut entries: Vec<RankedEntry> = scores
            .into_iter()
            .map(|(passage_id, score)| RankedEntry { passage_id, score })
            .collect();
        entries.sort_by(|a, b| rank_order(a.score, &a.passage_id, b.score, &b.passage_id));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.passage_id.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }
}

fn rank_order(sa: f64, ida: &str, sb: f64, idb: &str) -> Ordering {
    sb.total_cmp(&sa).then_with(|| ida.cmp(idb))
}

/// Token pattern whose occurrences mean "this identifier belongs to the
/// passage": anchored views include their delimiters.
pub fn match_pattern(view: ViewPrefix, tokens: &[TokenId]) -> Vec<TokenId> {
    match view {
        ViewPrefix::Title => [&[text::TITLE_START], tokens, &[text::TITLE_END]].concat(),
        ViewPrefix::PseudoQuery => [&[text::QUERY_START], tokens, &[text::QUERY_END]].concat(),
        ViewPrefix::Substring => tokens.to_vec(),
    }
}

/// Content spans of `prediction` per document, restricted to its view's region.
fn occurrences(prediction: &Prediction, index: &FmIndex) -> BTreeMap<usize, Vec<(usize, usize)>> {
    let mut out: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    let len = prediction.tokens.len();
    if len == 0 || prediction.tokens.iter().any(|&t| !text::is_content(t)) {
        return out;
    }
    let pattern = match_pattern(prediction.view, &prediction.tokens);
    let anchored = prediction.view != ViewPrefix::Substring;
    for loc in index.locate(&pattern, usize::MAX) {
        if anchored {
            out.entry(loc.doc).or_default().push((loc.offset + 1, loc.offset + 1 + len));
        } else if index.in_body(loc.doc, loc.offset, len) {
            out.entry(loc.doc).or_default().push((loc.offset, loc.offset + len));
        }
    }
    for spans in out.values_mut() {
        spans.sort_unstable();
    }
    out
}

fn flatten_predictions(predictions: &ViewPredictions) -> Vec<&Prediction> {
    predictions.values().flatten().collect()
}

type Hits = Vec<(usize, Vec<(usize, usize)>)>;

/// Builds a covered set from `(prediction index, spans)` hits of one passage.
fn resolve(passage_id: &str, preds: &[&Prediction], mut hits: Hits) -> CoveredSet {
    hits.sort_by_key(|(i, _)| *i);
    let (subs, others): (Hits, Hits) = hits
        .into_iter()
        .partition(|(i, _)| preds[*i].view == ViewPrefix::Substring);

    let mut priority = subs;
    priority.sort_by(|(i, _), (j, _)| {
        let (a, b) = (preds[*i], preds[*j]);
        b.score
            .total_cmp(&a.score)
            .then(b.tokens.len().cmp(&a.tokens.len()))
            .then_with(|| a.text.cmp(&b.text))
            .then(i.cmp(j))
    });
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut kept: Hits = Vec::new();
    for (i, spans) in priority {
        let free: Vec<(usize, usize)> = spans
            .into_iter()
            .filter(|&(lo, hi)| taken.iter().all(|&(a, b)| hi <= a || b <= lo))
            .collect();
        if !free.is_empty() {
            taken.extend(&free);
            kept.push((i, free));
        }
    }

    let mut all: Hits = others.into_iter().chain(kept).collect();
    all.sort_by_key(|(i, _)| *i);
    CoveredSet {
        passage_id: passage_id.to_string(),
        entries: all
            .into_iter()
            .map(|(i, spans)| CoveredEntry {
                prediction: preds[i].clone(),
                spans,
            })
            .collect(),
    }
}

/// Passages that contain at least one prediction in its view's region.
pub fn gather_candidates(predictions: &ViewPredictions, index: &FmIndex) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in flatten_predictions(predictions) {
        for doc in occurrences(p, index).into_keys() {
            out.insert(index.doc_id(doc).to_string());
        }
    }
    out
}

pub fn cover(passage_id: &str, predictions: &ViewPredictions, index: &FmIndex) -> Result<CoveredSet> {
    let doc = index
        .doc_index(passage_id)
        .ok_or_else(|| Error::UnknownPassage(passage_id.to_string()))?;
    let preds = flatten_predictions(predictions);
    let hits: Hits = preds
        .iter()
        .enumerate()
        .filter_map(|(i, p)| occurrences(p, index).remove(&doc).map(|s| (i, s)))
        .collect();
    Ok(resolve(passage_id, &preds, hits))
}

pub fn score_passage(covered: &CoveredSet, transform: &ScoreTransform) -> f64 {
    covered.entries.iter().map(|e| transform.apply(&e.prediction)).sum()
}

/// Gathers candidates, covers and scores each one, and sorts.
pub fn rank(predictions: &ViewPredictions, index: &FmIndex, transform: &ScoreTransform) -> RankedList {
    let preds = flatten_predictions(predictions);
    let mut per_doc: BTreeMap<usize, Hits> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        for (doc, spans) in occurrences(p, index) {
            per_doc.entry(doc).or_default().push((i, spans));
        }
    }
    RankedList::from_scores(per_doc.into_iter().map(|(doc, hits)| {
        let id = index.doc_id(doc);
        let covered = resolve(id, &preds, hits);
        (id.to_string(), score_passage(&covered, transform))
    }))
}
