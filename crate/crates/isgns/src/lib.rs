//! Streaming word-embedding toolkit.
//!
//! Trains skip-gram models with negative sampling in a single pass over an
//! unbounded token stream: the vocabulary is a bounded Misra-Gries summary,
//! the noise distribution lives in an adaptive unigram table that is updated
//! in place, and SGD steps use AdaGrad so no learning-rate schedule has to
//! know the stream length in advance. A two-pass batch trainer, an evaluation
//! kit (word similarity, analogies) and a Monte-Carlo harness for the
//! objective-difference moments round out the toolkit.
//!
//! Everything is deterministic under a single `--seed`: random draws come
//! from named sub-streams and their cursors travel inside checkpoints, so
//! training on a stream prefix and resuming on the suffix reproduces the
//! unsplit run bit for bit.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod evalkit;
pub mod model;
pub mod noise;
pub mod rng;
pub mod theory;
pub mod trainer;
pub mod vocab;

pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use corpus::TokenSource;
pub use model::{AdaGradState, EmbeddingModel, PairBatch};
pub use noise::UnigramTable;
pub use trainer::{TrainReport, UpdateTiming};
pub use vocab::{VocabEvent, Vocabulary, WordId};
