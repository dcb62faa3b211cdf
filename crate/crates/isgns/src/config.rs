//! Training hyperparameters and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All knobs of a training run.
///
/// `window`, `negatives`, `smoothing`, `dim`, `max_vocab`, `table_cap`,
/// `learning_rate` and `subsample` correspond to the usual skip-gram
/// parameters c, k, alpha, d, m, tau, eta and t. `minibatch` switches the
/// incremental trainer to chunked noise updates when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Context window size c (tokens on each side of the target).
    pub window: usize,
    /// Negative samples k per target-context pair.
    pub negatives: usize,
    /// Noise-distribution smoothing exponent alpha, in (0, 1].
    pub smoothing: f64,
    /// Embedding dimension d.
    pub dim: usize,
    /// Maximum number of live vocabulary entries m.
    pub max_vocab: usize,
    /// Maximum unigram-table length tau.
    pub table_cap: usize,
    /// AdaGrad base learning rate eta.
    pub learning_rate: f64,
    /// Subsampling threshold t; tokens with frequency ratio p are kept with
    /// probability min(1, sqrt(t/p)).
    pub subsample: f64,
    /// Mini-batch size M in tokens; `None` trains fully incrementally.
    pub minibatch: Option<usize>,
    /// Master seed for all named random sub-streams.
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Desk-scale defaults: the embedding size is scaled down to 100, the
    /// remaining values follow the common large-corpus configuration
    /// (see [`TrainConfig::paper_defaults`]).
    fn default() -> Self {
        TrainConfig {
            window: 10,
            negatives: 10,
            smoothing: 0.75,
            dim: 100,
            max_vocab: 100_000,
            table_cap: 10_000_000,
            learning_rate: 0.1,
            subsample: 1.0e-5,
            minibatch: None,
            seed: 42,
        }
    }
}

impl TrainConfig {
    /// The full-scale configuration (400-dimensional embeddings).
    pub fn paper_defaults() -> Self {
        TrainConfig {
            dim: 400,
            max_vocab: 240_000,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: usize) -> Result<(), ConfigError> {
            if v == 0 {
                return Err(ConfigError::invalid(field, "a positive integer", v));
            }
            Ok(())
        }
        positive("window", self.window)?;
        positive("negatives", self.negatives)?;
        positive("dim", self.dim)?;
        positive("max-vocab", self.max_vocab)?;
        positive("table-cap", self.table_cap)?;
        if let Some(m) = self.minibatch {
            positive("batch-size", m)?;
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(ConfigError::invalid("alpha", "in (0, 1]", self.smoothing));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::invalid(
                "learning-rate",
                "finite and positive",
                self.learning_rate,
            ));
        }
        if !(self.subsample > 0.0 && self.subsample.is_finite()) {
            return Err(ConfigError::invalid(
                "subsample",
                "finite and positive",
                self.subsample,
            ));
        }
        Ok(())
    }

    /// Checks the fields that fix data-structure shapes and the noise
    /// distribution. A checkpoint can only be resumed when these agree.
    pub fn structural_match(&self, resumed: &TrainConfig) -> Result<(), ConfigError> {
        fn check<T: PartialEq + std::fmt::Display>(
            field: &'static str,
            ckpt: T,
            req: T,
        ) -> Result<(), ConfigError> {
            if ckpt != req {
                return Err(ConfigError::Mismatch {
                    field,
                    checkpoint: ckpt.to_string(),
                    requested: req.to_string(),
                });
            }
            Ok(())
        }
        check("dim", self.dim, resumed.dim)?;
        check("max-vocab", self.max_vocab, resumed.max_vocab)?;
        check("table-cap", self.table_cap, resumed.table_cap)?;
        check("alpha", self.smoothing, resumed.smoothing)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field} must be {requirement}, got {value}")]
    Invalid {
        field: &'static str,
        requirement: &'static str,
        value: String,
    },
    #[error("config file {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("checkpoint config mismatch on {field}: checkpoint has {checkpoint}, requested {requested}")]
    Mismatch {
        field: &'static str,
        checkpoint: String,
        requested: String,
    },
}

impl ConfigError {
    fn invalid<V: std::fmt::Display>(
        field: &'static str,
        requirement: &'static str,
        value: V,
    ) -> Self {
        ConfigError::Invalid {
            field,
            requirement,
            value: value.to_string(),
        }
    }
}
