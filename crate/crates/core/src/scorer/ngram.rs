// SPDX-License-Identifier: Apache-2.0

//! Query-conditioned n-gram scorer.
//!
//! Counts are keyed on `(view, query feature, history length k, last k
//! output tokens)`. A query feature is a hashed query word; one extra bias
//! feature is present for every query. The next-token distribution is a
//! weighted mixture of the additively smoothed distributions of every
//! context seen in training, with weights `idf(feature) * (k + 1)`. With no
//! matching context the distribution is uniform over the vocabulary.

use std::collections::{BTreeSet, HashMap};
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Scorer, ScoringContext, TrainingSample, ViewPrefix};
use crate::error::{Error, Result};
use crate::text::{stable_hash, TokenId, Vocabulary};

const MAGIC: &[u8; 4] = b"MNSC";
const VERSION: u32 = 1;
const BIAS_FEATURE: u32 = u32::MAX;
const BOS: TokenId = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramConfig {
    /// n: the model conditions on up to `order - 1` previous output tokens.
    pub order: usize,
    /// Additive smoothing constant.
    pub smoothing: f64,
    /// Number of hash buckets for query words.
    pub feature_buckets: u32,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self {
            order: 3,
            smoothing: 0.1,
            feature_buckets: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u32,
    counts: HashMap<TokenId, u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramScorer {
    config: NgramConfig,
    vocab_size: usize,
    vocab_fingerprint: u64,
    /// Number of training queries and per-feature document frequency.
    queries: u32,
    doc_freq: HashMap<u32, u32>,
    contexts: HashMap<u64, ContextCounts>,
}

fn context_key(view: ViewPrefix, feature: u32, history: &[TokenId]) -> u64 {
    let mut buf = Vec::with_capacity(9 + 4 * history.len());
    buf.push(view as u8);
    buf.extend_from_slice(&feature.to_le_bytes());
    buf.extend_from_slice(&(history.len() as u32).to_le_bytes());
    for t in history {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    stable_hash(&buf)
}

impl NgramScorer {
    /// Trains on `samples`. An empty sample list yields a uniform scorer.
    pub fn train(samples: &[TrainingSample], vocab: &Vocabulary, config: NgramConfig) -> Result<Self> {
        if config.order == 0 {
            return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
        }
        if !(config.smoothing > 0.0 && config.smoothing.is_finite()) {
            return Err(Error::InvalidArgument("smoothing must be positive".into()));
        }
        if config.feature_buckets == 0 {
            return Err(Error::InvalidArgument("feature buckets must be positive".into()));
        }
        let mut model = Self {
            config,
            vocab_size: vocab.len(),
            vocab_fingerprint: vocab.fingerprint(),
            queries: 0,
            doc_freq: HashMap::new(),
            contexts: HashMap::new(),
        };
        for s in samples {
            let features = model.features(&s.query_tokens);
            model.queries += 1;
            for &f in &features {
                if f != BIAS_FEATURE {
                    *model.doc_freq.entry(f).or_insert(0) += 1;
                }
            }
            let mut seq = s.target_tokens.clone();
            seq.push(s.prefix.close_token());
            let mut padded = vec![BOS; config.order - 1];
            padded.extend_from_slice(&seq);
            for i in 0..seq.len() {
                let here = i + config.order - 1;
                let next = padded[here];
                for k in 0..config.order {
                    let history = &padded[here - k..here];
                    for &f in &features {
                        let ctx = model.contexts.entry(context_key(s.prefix, f, history)).or_default();
                        ctx.total += 1;
                        *ctx.counts.entry(next).or_insert(0) += 1;
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> NgramConfig {
        self.config
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        self.vocab_fingerprint
    }

    fn features(&self, query: &[String]) -> BTreeSet<u32> {
        let mut out: BTreeSet<u32> = query
            .iter()
            .map(|w| (stable_hash(w.as_bytes()) % u64::from(self.config.feature_buckets)) as u32)
            .collect();
        out.insert(BIAS_FEATURE);
        out
    }

    fn feature_weight(&self, feature: u32) -> f64 {
        if feature == BIAS_FEATURE {
            return 1.0;
        }
        let df = self.doc_freq.get(&feature).copied().unwrap_or(0);
        (1.0 + f64::from(self.queries) / f64::from(df.max(1))).ln()
    }

    /// Probabilities (not logs) for each candidate.
    fn probabilities(&self, context: &ScoringContext<'_>, candidates: &[TokenId]) -> Vec<f64> {
        let order = self.config.order;
        let alpha = self.config.smoothing;
        let v = self.vocab_size.max(1) as f64;
        let mut padded = vec![BOS; order - 1];
        padded.extend_from_slice(context.output);
        let here = padded.len();

        let mut acc = vec![0.0; candidates.len()];
        let mut weight_sum = 0.0;
        for f in self.features(context.query) {
            let fw = self.feature_weight(f);
            for k in 0..order {
                let Some(ctx) = self.contexts.get(&context_key(context.view, f, &padded[here - k..here])) else {
                    continue;
                };
                let w = fw * (k + 1) as f64;
                let denom = f64::from(ctx.total) + alpha * v;
                for (a, t) in acc.iter_mut().zip(candidates) {
                    let c = f64::from(ctx.counts.get(t).copied().unwrap_or(0));
                    *a += w * (c + alpha) / denom;
                }
                weight_sum += w;
            }
        }
        if weight_sum == 0.0 {
            return vec![1.0 / v; candidates.len()];
        }
        acc.iter_mut().for_each(|a| *a /= weight_sum);
        acc
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Loads a scorer, refusing one trained against a different vocabulary.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, vocab)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w: Vec<u8> = Vec::new();
        w.extend_from_slice(MAGIC);
        w.write_u32::<LE>(VERSION).unwrap();
        w.write_u64::<LE>(self.vocab_fingerprint).unwrap();
        w.write_u32::<LE>(self.vocab_size as u32).unwrap();
        w.write_u32::<LE>(self.config.order as u32).unwrap();
        w.write_f64::<LE>(self.config.smoothing).unwrap();
        w.write_u32::<LE>(self.config.feature_buckets).unwrap();
        w.write_u32::<LE>(self.queries).unwrap();

        let mut df: Vec<_> = self.doc_freq.iter().collect();
        df.sort();
        w.write_u64::<LE>(df.len() as u64).unwrap();
        for (&f, &c) in df {
            w.write_u32::<LE>(f).unwrap();
            w.write_u32::<LE>(c).unwrap();
        }

        let mut keys: Vec<&u64> = self.contexts.keys().collect();
        keys.sort();
        w.write_u64::<LE>(keys.len() as u64).unwrap();
        for key in keys {
            let ctx = &self.contexts[key];
            w.write_u64::<LE>(*key).unwrap();
            w.write_u32::<LE>(ctx.total).unwrap();
            let mut counts: Vec<_> = ctx.counts.iter().collect();
            counts.sort();
            w.write_u32::<LE>(counts.len() as u32).unwrap();
            for (&t, &c) in counts {
                w.write_u32::<LE>(t).unwrap();
                w.write_u32::<LE>(c).unwrap();
            }
        }
        let crc = crc32fast::hash(&w);
        w.write_u32::<LE>(crc).unwrap();
        w
    }

    pub fn from_bytes(bytes: &[u8], vocab: &Vocabulary) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("scorer file: {m}"));
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(bad("missing MNSC magic bytes"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(trailer.try_into().unwrap()) {
            return Err(bad("checksum mismatch"));
        }
        let mut r = Cursor::new(&body[4..]);
        let io = |_| bad("truncated");
        let version = r.read_u32::<LE>().map_err(io)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let fingerprint = r.read_u64::<LE>().map_err(io)?;
        if fingerprint != vocab.fingerprint() {
            return Err(Error::VocabularyMismatch {
                expected: vocab.fingerprint(),
                found: fingerprint,
            });
        }
        let vocab_size = r.read_u32::<LE>().map_err(io)? as usize;
        let config = NgramConfig {
            order: r.read_u32::<LE>().map_err(io)? as usize,
            smoothing: r.read_f64::<LE>().map_err(io)?,
            feature_buckets: r.read_u32::<LE>().map_err(io)?,
        };
        if config.order == 0 || config.feature_buckets == 0 || config.smoothing.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(bad("invalid model parameters"));
        }
        let queries = r.read_u32::<LE>().map_err(io)?;
        let remaining = |r: &Cursor<&[u8]>| r.get_ref().len() - r.position() as usize;
        let n_df = r.read_u64::<LE>().map_err(io)? as usize;
        if n_df.saturating_mul(8) > remaining(&r) {
            return Err(bad("truncated"));
        }
        let mut doc_freq = HashMap::with_capacity(n_df);
        for _ in 0..n_df {
            doc_freq.insert(r.read_u32::<LE>().map_err(io)?, r.read_u32::<LE>().map_err(io)?);
        }
        let n_ctx = r.read_u64::<LE>().map_err(io)? as usize;
        if n_ctx.saturating_mul(16) > remaining(&r) {
            return Err(bad("truncated"));
        }
        let mut contexts = HashMap::with_capacity(n_ctx);
        for _ in 0..n_ctx {
            let key = r.read_u64::<LE>().map_err(io)?;
            let total = r.read_u32::<LE>().map_err(io)?;
            let n = r.read_u32::<LE>().map_err(io)? as usize;
            if n.saturating_mul(8) > remaining(&r) {
                return Err(bad("truncated"));
            }
            let mut counts = HashMap::with_capacity(n);
            for _ in 0..n {
                counts.insert(r.read_u32::<LE>().map_err(io)?, r.read_u32::<LE>().map_err(io)?);
            }
            contexts.insert(key, ContextCounts { total, counts });
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(io)?;
        if !rest.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            config,
            vocab_size,
            vocab_fingerprint: fingerprint,
            queries,
            doc_freq,
            contexts,
        })
    }
}

impl Scorer for NgramScorer {
    fn log_probs(&self, context: &ScoringContext<'_>, candidates: &[TokenId]) -> Vec<f64> {
        self.probabilities(context, candidates).into_iter().map(f64::ln).collect()
    }
}
