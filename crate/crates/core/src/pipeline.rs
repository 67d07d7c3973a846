// SPDX-License-Identifier: Apache-2.0

//! Query in, ranked passages out.

use crate::corpus::{Corpus, FlatStream};
use crate::decoder::{generate_all, BeamConfig, ViewPredictions};
use crate::error::{Error, Result};
use crate::eval::{run_eval, Metric, Qrels, Report, Retrieve};
use crate::fm_index::FmIndex;
use crate::ranker::{rank, RankedList, ScoreTransform};
use crate::scorer::{Scorer, ViewPrefix};
use crate::text::WordTokenizer;

#[derive(Debug, Clone)]
pub struct RetrievalConfig {
    pub beam: BeamConfig,
    pub views: Vec<ViewPrefix>,
    pub transform: ScoreTransform,
    /// Passages kept per query.
    pub top_k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            beam: BeamConfig::default(),
            views: ViewPrefix::ALL.to_vec(),
            transform: ScoreTransform::default(),
            top_k: 100,
        }
    }
}

pub struct Retriever<'a> {
    index: &'a FmIndex,
    scorer: &'a dyn Scorer,
    config: RetrievalConfig,
}

impl<'a> Retriever<'a> {
    pub fn new(index: &'a FmIndex, scorer: &'a dyn Scorer, config: RetrievalConfig) -> Result<Self> {
        config.beam.validate()?;
        if config.views.is_empty() {
            return Err(Error::InvalidArgument("at least one view must be enabled".into()));
        }
        if config.top_k == 0 {
            return Err(Error::InvalidArgument("top-k must be at least 1".into()));
        }
        Ok(Self { index, scorer, config })
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn predict(&self, query: &str) -> Result<ViewPredictions> {
        generate_all(query, self.index, self.scorer, &self.config.beam, &self.config.views)
    }
}

impl Retrieve for Retriever<'_> {
    fn retrieve(&self, query: &str) -> Result<RankedList> {
        let preds = self.predict(query)?;
        let mut ranked = rank(&preds, self.index, &self.config.transform);
        ranked.truncate(self.config.top_k);
        Ok(ranked)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beam_size: usize,
    pub report: Report,
}

/// Evaluates the same setup at several beam sizes.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    index: &FmIndex,
    scorer: &dyn Scorer,
    base: &RetrievalConfig,
    beam_sizes: &[usize],
    queries: &[(String, String)],
    qrels: &Qrels,
    metrics: &[Metric],
    workers: usize,
) -> Result<Vec<SweepRow>> {
    beam_sizes
        .iter()
        .map(|&beam_size| {
            let config = RetrievalConfig {
                beam: base.beam.with_beam(beam_size),
                ..base.clone()
            };
            let retriever = Retriever::new(index, scorer, config)?;
            let (_, report) = run_eval(queries, qrels, &retriever, metrics, workers)?;
            Ok(SweepRow { beam_size, report })
        })
        .collect()
}

/// Checks that `corpus` is the corpus `index` was built from (same ids, same
/// title and body tokens) and returns it carrying the pseudo-queries stored
/// in the index.
pub fn restore_pseudo_queries(corpus: &Corpus, index: &FmIndex) -> Result<Corpus> {
    if corpus.doc_count() != index.doc_count() {
        return Err(Error::CorpusMismatch(format!(
            "corpus has {} passages, index has {}",
            corpus.doc_count(),
            index.doc_count()
        )));
    }
    let vocab = index.vocab();
    let mut passages = Vec::with_capacity(corpus.doc_count());
    for p in corpus.passages() {
        let doc = index
            .doc_index(&p.id)
            .ok_or_else(|| Error::CorpusMismatch(format!("passage {:?} is not indexed", p.id)))?;
        let stream = FlatStream {
            doc_id: p.id.clone(),
            tokens: index.document(doc),
        };
        let seg = stream
            .segments()
            .ok_or_else(|| Error::Format(format!("stream of {:?} is malformed", p.id)))?;
        if seg.title != vocab.encode(&WordTokenizer, &p.title) || seg.body != vocab.encode(&WordTokenizer, &p.body) {
            return Err(Error::CorpusMismatch(format!(
                "passage {:?} differs from its indexed text",
                p.id
            )));
        }
        let mut restored = p.clone();
        restored.pseudo_queries = seg.queries.iter().map(|q| vocab.decode(q)).collect();
        passages.push(restored);
    }
    Corpus::new(passages)
}
