// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use multiview::corpus::{build_vocabulary, flatten_corpus};
use multiview::scorer::{build_training_samples, NgramConfig, SampleConfig};
use multiview::synthetic::{generate, Benchmark, SyntheticConfig};
use multiview::{FmIndex, NgramScorer, WordTokenizer};

pub struct Fixture {
    pub bench: Benchmark,
    pub index: FmIndex,
    pub scorer: NgramScorer,
}

/// Synthetic benchmark with `entities` entities (20 passages each), its
/// index, and a scorer trained on its pairs.
pub fn fixture(entities: usize) -> Fixture {
    let bench = generate(&SyntheticConfig {
        entities,
        ..Default::default()
    });
    let vocab = build_vocabulary(&bench.corpus, &WordTokenizer);
    let index = FmIndex::build(&flatten_corpus(&bench.corpus, &vocab), vocab).expect("synthetic corpus indexes");
    let samples = build_training_samples(&bench.train_pairs, &bench.corpus, index.vocab(), &SampleConfig::default(), 1)
        .expect("pairs reference the corpus");
    let scorer = NgramScorer::train(&samples, index.vocab(), NgramConfig::default()).expect("default config is valid");
    Fixture { bench, index, scorer }
}
