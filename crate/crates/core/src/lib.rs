// SPDX-License-Identifier: Apache-2.0

//! Multi-view generative passage retrieval over an FM-index.

pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod fm_index;
pub mod pipeline;
pub mod ranker;
pub mod scorer;
pub mod synthetic;
pub mod text;

pub use corpus::{Corpus, Passage};
pub use decoder::{BeamConfig, Prediction};
pub use error::{Error, Result};
pub use eval::{Metric, Qrels, Report, Retrieve, Run};
pub use fm_index::FmIndex;
pub use pipeline::{RetrievalConfig, Retriever};
pub use ranker::{RankedList, ScoreTransform};
pub use scorer::{NgramScorer, Scorer, TrainingSample, ViewPrefix, ViewRatio};
pub use text::{TokenId, Vocabulary, WordTokenizer};
