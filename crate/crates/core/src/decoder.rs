// SPDX-License-Identifier: Apache-2.0

//! Constrained beam search over the FM-index.
//!
//! Every step the candidate set is the set of tokens the index says can
//! follow the current partial identifier, so every emitted identifier
//! occurs in the corpus. Title and pseudo-query beams are anchored at their
//! opening delimiter and finish on the closing one. Substring beams start
//! anywhere in a body region, stay inside body regions, and finish on the
//! body-end stop symbol or at `max_len`.
//!
//! Scorer outputs are renormalized over the valid candidate set at each
//! step; a prediction's score is the sum of the chosen tokens' renormalized
//! log-probabilities (closing token included), plus the length bias for the
//! pseudo-query view.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fm_index::{ExtensionRange, FmIndex};
use crate::scorer::{Scorer, ScoringContext, ViewPrefix};
use crate::text::{self, TokenId, Tokenizer, WordTokenizer};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub view: ViewPrefix,
    pub tokens: Vec<TokenId>,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub title_max_len: usize,
    pub substring_max_len: usize,
    pub pseudo_query_max_len: usize,
    /// Added to pseudo-query scores once per token.
    pub query_length_bias: f64,
    pub predictions_per_view: usize,
    /// Each hypothesis expands its best `candidate_factor * beam_size` candidates.
    pub candidate_factor: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_size: 15,
            title_max_len: 24,
            substring_max_len: 10,
            pseudo_query_max_len: 32,
            query_length_bias: 0.0,
            predictions_per_view: 15,
            candidate_factor: 2,
        }
    }
}

impl BeamConfig {
    pub fn max_len(&self, view: ViewPrefix) -> usize {
        match view {
            ViewPrefix::Title => self.title_max_len,
            ViewPrefix::Substring => self.substring_max_len,
            ViewPrefix::PseudoQuery => self.pseudo_query_max_len,
        }
    }

    /// Same configuration with a different beam size; the number of kept
    /// predictions follows the beam.
    pub fn with_beam(&self, beam_size: usize) -> Self {
        Self {
            beam_size,
            predictions_per_view: beam_size,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lens = [self.title_max_len, self.substring_max_len, self.pseudo_query_max_len];
        if self.beam_size == 0 || lens.contains(&0) || self.candidate_factor == 0 {
            return Err(Error::InvalidArgument(
                "beam size, candidate factor and max lengths must be at least 1".into(),
            ));
        }
        if !self.query_length_bias.is_finite() {
            return Err(Error::InvalidArgument("query length bias must be finite".into()));
        }
        Ok(())
    }
}

struct Hyp {
    tokens: Vec<TokenId>,
    range: ExtensionRange,
    score: f64,
}

fn by_score_then_tokens(a: (f64, &[TokenId]), b: (f64, &[TokenId])) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Renormalizes log-scores into log-probabilities over the set.
pub fn log_softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let uniform = -(scores.len() as f64).ln();
        scores.iter_mut().for_each(|s| *s = uniform);
        return;
    }
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter_mut().for_each(|s| *s -= lse);
}

/// Valid next tokens for a partial identifier of `view`, before length limits.
pub fn valid_candidates(index: &FmIndex, view: ViewPrefix, range: ExtensionRange, emitted: usize) -> Vec<TokenId> {
    let close = view.close_token();
    match view {
        ViewPrefix::Substring => {
            let mut c: Vec<TokenId> = index
                .body_continuations(range)
                .into_iter()
                .map(|(t, _)| t)
                .filter(|&t| text::is_content(t))
                .collect();
            if emitted > 0 {
                c.push(close);
            }
            c
        }
        _ => index
            .continuations(range)
            .into_iter()
            .map(|(t, _)| t)
            .filter(|&t| text::is_content(t) || (t == close && emitted > 0))
            .collect(),
    }
}

/// Query words as the scorer sees them.
pub fn query_words(query: &str) -> Vec<String> {
    WordTokenizer.tokenize(query)
}

pub fn generate_view(
    query: &str,
    view: ViewPrefix,
    index: &FmIndex,
    scorer: &dyn Scorer,
    config: &BeamConfig,
) -> Result<Vec<Prediction>> {
    config.validate()?;
    let words = query_words(query);
    let close = view.close_token();
    let max_len = config.max_len(view);
    let start = match view.open_token() {
        Some(open) => index.extend_forward(index.root_extension(), open),
        None => index.root_extension(),
    };
    if start.is_empty() {
        return Ok(Vec::new());
    }
    let expand = config.candidate_factor.saturating_mul(config.beam_size);
    let mut live = vec![Hyp {
        tokens: Vec::new(),
        range: start,
        score: 0.0,
    }];
    let mut finished: Vec<(Vec<TokenId>, f64)> = Vec::new();

    while !live.is_empty() {
        let mut next: Vec<Hyp> = Vec::new();
        for hyp in &live {
            let cands = valid_candidates(index, view, hyp.range, hyp.tokens.len());
            if cands.is_empty() {
                continue;
            }
            let ctx = ScoringContext {
                view,
                query: &words,
                output: &hyp.tokens,
            };
            let mut lps = scorer.log_probs(&ctx, &cands);
            log_softmax(&mut lps);
            let mut order: Vec<usize> = (0..cands.len())
                .filter(|&i| cands[i] == close || hyp.tokens.len() < max_len)
                .collect();
            order.sort_by(|&i, &j| lps[j].total_cmp(&lps[i]).then(cands[i].cmp(&cands[j])));
            order.truncate(expand);
            for i in order {
                let (t, score) = (cands[i], hyp.score + lps[i]);
                if t == close {
                    finished.push((hyp.tokens.clone(), score));
                    continue;
                }
                let mut tokens = hyp.tokens.clone();
                tokens.push(t);
                if view == ViewPrefix::Substring && tokens.len() == max_len {
                    finished.push((tokens, score));
                    continue;
                }
                next.push(Hyp {
                    range: index.extend_forward(hyp.range, t),
                    tokens,
                    score,
                });
            }
        }
        next.sort_by(|a, b| by_score_then_tokens((a.score, &a.tokens), (b.score, &b.tokens)));
        next.truncate(config.beam_size);
        live = next;
    }

    let mut best: HashMap<Vec<TokenId>, f64> = HashMap::new();
    for (tokens, score) in finished {
        let e = best.entry(tokens).or_insert(f64::NEG_INFINITY);
        *e = e.max(score);
    }
    let vocab = index.vocab();
    let mut preds: Vec<Prediction> = best
        .into_iter()
        .map(|(tokens, score)| Prediction {
            view,
            text: vocab.decode(&tokens),
            tokens,
            score,
        })
        .collect();
    if view == ViewPrefix::PseudoQuery {
        preds = apply_length_bias(preds, config.query_length_bias);
    } else {
        sort_predictions(&mut preds);
    }
    preds.truncate(config.predictions_per_view);
    Ok(preds)
}

fn sort_predictions(preds: &mut [Prediction]) {
    preds.sort_by(|a, b| by_score_then_tokens((a.score, &a.tokens), (b.score, &b.tokens)));
}

/// `score += bias * token length`, then re-sorts by score.
pub fn apply_length_bias(mut predictions: Vec<Prediction>, bias_per_token: f64) -> Vec<Prediction> {
    for p in &mut predictions {
        p.score += bias_per_token * p.tokens.len() as f64;
    }
    sort_predictions(&mut predictions);
    predictions
}

pub type ViewPredictions = BTreeMap<ViewPrefix, Vec<Prediction>>;

pub fn generate_all(
    query: &str,
    index: &FmIndex,
    scorer: &dyn Scorer,
    config: &BeamConfig,
    views: &[ViewPrefix],
) -> Result<ViewPredictions> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("at least one view must be enabled".into()));
    }
    views
        .iter()
        .map(|&v| Ok((v, generate_view(query, v, index, scorer, config)?)))
        .collect()
}
