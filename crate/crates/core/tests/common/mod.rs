// SPDX-License-Identifier: Apache-2.0

//! Naive reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use multiview::corpus::{FlatStream, Segments};
use multiview::decoder::{Prediction, ViewPredictions};
use multiview::ranker::ScoreTransform;
use multiview::text::{TokenId, EOD};
use multiview::ViewPrefix;
use rand::Rng;

/// Random content-only streams over `words` distinct words.
pub fn random_streams<R: Rng>(rng: &mut R, docs: usize, max_len: usize, words: usize) -> Vec<FlatStream> {
    let first = multiview::text::FIRST_CONTENT_ID;
    (0..docs)
        .map(|d| {
            let len = rng.gen_range(1..=max_len);
            let mut tokens: Vec<TokenId> = (0..len).map(|_| first + rng.gen_range(0..words as u32)).collect();
            tokens.push(EOD);
            FlatStream {
                doc_id: format!("d{d}"),
                tokens,
            }
        })
        .collect()
}

fn occurrences_in<'a>(tokens: &'a [TokenId], pattern: &[TokenId]) -> impl Iterator<Item = usize> + 'a {
    let pattern = pattern.to_vec();
    (0..tokens.len().saturating_sub(pattern.len() - 1)).filter(move |&i| tokens[i..i + pattern.len()] == pattern[..])
}

pub fn naive_count(streams: &[FlatStream], pattern: &[TokenId]) -> usize {
    streams.iter().map(|s| occurrences_in(&s.tokens, pattern).count()).sum()
}

pub fn naive_locate(streams: &[FlatStream], pattern: &[TokenId]) -> Vec<(usize, usize)> {
    streams
        .iter()
        .enumerate()
        .flat_map(|(d, s)| occurrences_in(&s.tokens, pattern).map(move |o| (d, o)))
        .collect()
}

pub fn naive_successors(streams: &[FlatStream], pattern: &[TokenId]) -> BTreeMap<TokenId, usize> {
    let mut out = BTreeMap::new();
    for s in streams {
        for i in occurrences_in(&s.tokens, pattern) {
            if let Some(&t) = s.tokens.get(i + pattern.len()) {
                if t != EOD {
                    *out.entry(t).or_insert(0) += 1;
                }
            }
        }
    }
    out
}

/// Greedy interval resolution over one passage's substring matches:
/// predictions in order of score desc, length desc, text asc; a prediction
/// keeps the occurrences disjoint from everything kept so far and counts if
/// it keeps at least one.
pub fn resolve_intervals(matches: &[(&Prediction, Vec<(usize, usize)>)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (matches[i].0, matches[j].0);
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(b.tokens.len().cmp(&a.tokens.len()))
            .then(a.text.cmp(&b.text))
            .then(i.cmp(&j))
    });
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut kept = Vec::new();
    for i in order {
        let free: Vec<_> = matches[i]
            .1
            .iter()
            .copied()
            .filter(|&(lo, hi)| taken.iter().all(|&(a, b)| hi <= a || b <= lo))
            .collect();
        if !free.is_empty() {
            taken.extend(free);
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Scores one passage directly from its identifier lists, or `None` when
/// no prediction matches it.
pub fn brute_force_score(segments: &Segments, preds: &ViewPredictions, transform: &ScoreTransform) -> Option<f64> {
    let body_start = segments.title.len() + 3;
    // (prediction position, contribution), summed in prediction order.
    let mut parts: Vec<(usize, f64)> = Vec::new();
    let mut subs: Vec<(&Prediction, Vec<(usize, usize)>)> = Vec::new();
    let mut sub_pos = Vec::new();
    for (i, p) in preds.values().flatten().enumerate() {
        if p.tokens.is_empty() {
            continue;
        }
        match p.view {
            ViewPrefix::Title => {
                if segments.title == p.tokens {
                    parts.push((i, transform.apply(p)));
                }
            }
            ViewPrefix::PseudoQuery => {
                if segments.queries.contains(&p.tokens) {
                    parts.push((i, transform.apply(p)));
                }
            }
            ViewPrefix::Substring => {
                let spans: Vec<_> = occurrences_in(&segments.body, &p.tokens)
                    .map(|o| (body_start + o, body_start + o + p.tokens.len()))
                    .collect();
                if !spans.is_empty() {
                    subs.push((p, spans));
                    sub_pos.push(i);
                }
            }
        }
    }
    let matched = !parts.is_empty() || !subs.is_empty();
    for k in resolve_intervals(&subs) {
        parts.push((sub_pos[k], transform.apply(subs[k].0)));
    }
    parts.sort_by_key(|&(i, _)| i);
    matched.then(|| parts.iter().map(|&(_, v)| v).sum())
}

/// Every passage's brute-force score, sorted by score desc then id asc.
pub fn brute_force_rank(
    streams: &[FlatStream],
    preds: &ViewPredictions,
    transform: &ScoreTransform,
) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = streams
        .iter()
        .filter_map(|s| {
            let seg = s.segments().expect("well-formed stream");
            brute_force_score(&seg, preds, transform).map(|score| (s.doc_id.clone(), score))
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// Whether `tokens` is a whole identifier of `view` (or, for substrings, a
/// run inside a body) in some passage.
pub fn identifier_exists(streams: &[FlatStream], view: ViewPrefix, tokens: &[TokenId]) -> bool {
    streams.iter().any(|s| {
        let seg = s.segments().expect("well-formed stream");
        match view {
            ViewPrefix::Title => seg.title == tokens,
            ViewPrefix::PseudoQuery => seg.queries.iter().any(|q| q == tokens),
            ViewPrefix::Substring => !tokens.is_empty() && occurrences_in(&seg.body, tokens).next().is_some(),
        }
    })
}
