// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TrainingSample, ViewPrefix};
use crate::corpus::{Corpus, Passage};
use crate::error::{Error, Result};
use crate::text::{TokenId, Tokenizer, Vocabulary, WordTokenizer};

/// Samples per view emitted for each supervised pair, `title:substring:pseudo-query`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewRatio {
    pub title: u32,
    pub substring: u32,
    pub pseudo_query: u32,
}

impl ViewRatio {
    pub fn get(&self, view: ViewPrefix) -> u32 {
        match view {
            ViewPrefix::Title => self.title,
            ViewPrefix::Substring => self.substring,
            ViewPrefix::PseudoQuery => self.pseudo_query,
        }
    }

    pub fn total(&self) -> u32 {
        self.title + self.substring + self.pseudo_query
    }
}

impl Default for ViewRatio {
    fn default() -> Self {
        Self {
            title: 3,
            substring: 10,
            pseudo_query: 5,
        }
    }
}

impl FromStr for ViewRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("ratio must look like 3:10:5, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<u32> = parts
            .iter()
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(Self {
            title: n[0],
            substring: n[1],
            pseudo_query: n[2],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub ratio: ViewRatio,
    /// Substring target length range, in tokens (inclusive).
    pub min_substring_len: usize,
    pub max_substring_len: usize,
    /// Character 3-gram overlap a substring target must exceed.
    pub overlap_threshold: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            ratio: ViewRatio::default(),
            min_substring_len: 4,
            max_substring_len: 16,
            overlap_threshold: 0.2,
        }
    }
}

fn trigrams(s: &str) -> HashMap<[char; 3], u32> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = HashMap::new();
    for w in chars.windows(3) {
        *out.entry([w[0], w[1], w[2]]).or_insert(0) += 1;
    }
    out
}

/// `|3-gram multiset intersection| / |query 3-gram multiset|`; 0 for queries
/// shorter than three characters.
pub fn char_trigram_overlap(query: &str, candidate: &str) -> f64 {
    overlap_with(&trigrams(query), candidate)
}

fn overlap_with(query_grams: &HashMap<[char; 3], u32>, candidate: &str) -> f64 {
    let total: u32 = query_grams.values().sum();
    if total == 0 {
        return 0.0;
    }
    let cand = trigrams(candidate);
    let shared: u32 = query_grams
        .iter()
        .map(|(g, &c)| c.min(cand.get(g).copied().unwrap_or(0)))
        .sum();
    f64::from(shared) / f64::from(total)
}

/// Picks a body window for a substring target: length uniform in the
/// configured range, a random window among those above the overlap
/// threshold, or else the best-overlap window of that length.
fn select_substring(
    query: &str,
    body: &[TokenId],
    vocab: &Vocabulary,
    config: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<TokenId> {
    let max_len = config.max_substring_len.min(body.len()).max(1);
    let min_len = config.min_substring_len.min(max_len).max(1);
    let len = rng.gen_range(min_len..=max_len);
    let grams = trigrams(query);
    let scored: Vec<(usize, f64)> = (0..=body.len() - len)
        .map(|start| (start, overlap_with(&grams, &vocab.decode(&body[start..start + len]))))
        .collect();
    let above: Vec<usize> = scored
        .iter()
        .filter(|&&(_, o)| o > config.overlap_threshold)
        .map(|&(s, _)| s)
        .collect();
    let start = if let Some(&s) = above.choose(rng) {
        s
    } else {
        scored
            .iter()
            .fold((0, f64::NEG_INFINITY), |best, &(s, o)| if o > best.1 { (s, o) } else { best })
            .0
    };
    body[start..start + len].to_vec()
}

fn lookup<'a>(corpus: &'a Corpus, index: &HashMap<&str, usize>, id: &str) -> Result<&'a Passage> {
    index
        .get(id)
        .map(|&i| &corpus.passages()[i])
        .ok_or_else(|| Error::UnknownPassage(id.to_string()))
}

/// Builds supervised samples: for each `(query, passage id)` pair, `ratio`
/// samples per view, then shuffles everything under `seed`.
pub fn build_training_samples(
    pairs: &[(String, String)],
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &SampleConfig,
    seed: u64,
) -> Result<Vec<TrainingSample>> {
    let tok = WordTokenizer;
    let by_id: HashMap<&str, usize> = corpus
        .passages()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (query, pid) in pairs {
        let passage = lookup(corpus, &by_id, pid)?;
        let query_tokens = tok.tokenize(query);
        let query_norm = query_tokens.join(" ");
        let sample = |prefix, target_tokens| TrainingSample {
            prefix,
            query_tokens: query_tokens.clone(),
            target_tokens,
            passage_id: passage.id.clone(),
        };
        let title = vocab.encode(&tok, &passage.title);
        if !title.is_empty() {
            for _ in 0..config.ratio.title {
                out.push(sample(ViewPrefix::Title, title.clone()));
            }
        }
        let body = vocab.encode(&tok, &passage.body);
        for _ in 0..config.ratio.substring {
            let target = select_substring(&query_norm, &body, vocab, config, &mut rng);
            out.push(sample(ViewPrefix::Substring, target));
        }
        if config.ratio.pseudo_query > 0 {
            if passage.pseudo_queries.is_empty() {
                log::warn!("passage {} has no pseudo-queries; skipping its pseudo-query samples", passage.id);
            } else {
                for _ in 0..config.ratio.pseudo_query {
                    let q = passage.pseudo_queries.choose(&mut rng).expect("non-empty");
                    out.push(sample(ViewPrefix::PseudoQuery, vocab.encode(&tok, q)));
                }
            }
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// For every passage with pseudo-queries, `per_passage` samples whose input
/// is one of its pseudo-queries and whose targets are its own identifiers,
/// cycling through the three views.
pub fn build_unsupervised_samples(
    corpus: &Corpus,
    vocab: &Vocabulary,
    per_passage: usize,
    config: &SampleConfig,
    seed: u64,
) -> Vec<TrainingSample> {
    let tok = WordTokenizer;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x756e_7375_7065_7276);
    let mut out = Vec::new();
    if per_passage == 0 {
        return out;
    }
    for passage in corpus.passages() {
        if passage.pseudo_queries.is_empty() {
            continue;
        }
        let title = vocab.encode(&tok, &passage.title);
        let body = vocab.encode(&tok, &passage.body);
        let mut view = rng.gen_range(0..3);
        for _ in 0..per_passage {
            let qi = rng.gen_range(0..passage.pseudo_queries.len());
            let input = &passage.pseudo_queries[qi];
            if view == 0 && title.is_empty() {
                view = 1;
            }
            let (prefix, target) = match view {
                0 => (ViewPrefix::Title, title.clone()),
                1 => (
                    ViewPrefix::Substring,
                    select_substring(&tok.normalize(input), &body, vocab, config, &mut rng),
                ),
                _ => {
                    let n = passage.pseudo_queries.len();
                    let other = if n > 1 { (qi + rng.gen_range(1..n)) % n } else { qi };
                    (ViewPrefix::PseudoQuery, vocab.encode(&tok, &passage.pseudo_queries[other]))
                }
            };
            out.push(TrainingSample {
                prefix,
                query_tokens: tok.tokenize(input),
                target_tokens: target,
                passage_id: passage.id.clone(),
            });
            view = (view + 1) % 3;
        }
    }
    out
}

/// Concatenates supervised and unsupervised samples and shuffles them under
/// `seed`.
pub fn mix_samples(supervised: Vec<TrainingSample>, unsupervised: Vec<TrainingSample>, seed: u64) -> Vec<TrainingSample> {
    let mut out = supervised;
    if unsupervised.is_empty() {
        return out;
    }
    out.extend(unsupervised);
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x006d_6978));
    out
}

/// Reads `query \t passage_id` lines.
pub fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((q, pid)) = line.split_once('\t') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected `query<TAB>passage_id`".into(),
            });
        };
        out.push((q.trim().to_string(), pid.trim().to_string()));
    }
    Ok(out)
}
