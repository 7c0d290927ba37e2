//! Small deterministic encoder-decoder translation model.
//!
//! A self-attention encoder-decoder with hand-written forward and backward
//! passes over f64 tensors, an Adam optimizer with the linear-warmup /
//! inverse-square-root schedule, length-normalized beam search, and a
//! directory checkpoint format (JSON header + little-endian float32 blobs).
//!
//! Determinism contract: single-worker training is bit-reproducible for a
//! fixed seed; batch gradients are accumulated in a fixed chunk order, so
//! enabling the parallel gradient path cannot change results.

mod beam;
mod checkpoint;
mod model;
mod trainer;

pub use beam::{translate, zero_shot_translate, TranslateOptions, ZeroShotReport};
pub use checkpoint::{init_model, Checkpoint, Tensor};
pub use model::{forward_logits, loss_and_grads, Params, SentenceExample};
pub use trainer::{train, EncodedPair, StepLog, TrainOutcome};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NmtError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("token id {id} out of range for {side} vocabulary of size {size}")]
    TokenOutOfRange {
        id: u32,
        side: &'static str,
        size: usize,
    },
    #[error("empty source segment")]
    EmptySource,
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error("checkpoint {path}: {message}")]
    BadCheckpoint { path: PathBuf, message: String },
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error(
        "zero-shot refused: language {lang} appears in the checkpoint's training manifest"
    )]
    LanguageSeenInTraining { lang: String },
    #[error("no spare control-token slot available for {lang}")]
    NoSpareControlSlot { lang: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Subword(#[from] crate::subword::SubwordError),
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub dropout: f64,
    /// When set, the target embedding and the pre-softmax projection are one
    /// tensor; the checkpoint stores it once under an alias.
    pub shared_embeddings: bool,
    pub max_len: usize,
}

impl ModelConfig {
    /// Desk-scale default: trains in seconds on synthetic families.
    pub fn desk() -> Self {
        ModelConfig {
            layers: 2,
            heads: 4,
            model_dim: 128,
            ff_dim: 512,
            dropout: 0.1,
            shared_embeddings: false,
            max_len: 100,
        }
    }

    /// The full-scale preset from the original setting (512-dim, 4 layers,
    /// 8 heads, dropout 0.3). Available by name; impractical to train here.
    pub fn paper() -> Self {
        ModelConfig {
            layers: 4,
            heads: 8,
            model_dim: 512,
            ff_dim: 2048,
            dropout: 0.3,
            shared_embeddings: false,
            max_len: 100,
        }
    }

    /// Tiny configuration for gradient checks and unit tests.
    pub fn micro() -> Self {
        ModelConfig {
            layers: 2,
            heads: 2,
            model_dim: 16,
            ff_dim: 32,
            dropout: 0.0,
            shared_embeddings: false,
            max_len: 32,
        }
    }

    pub fn validate(&self) -> Result<(), NmtError> {
        if self.layers == 0 {
            return Err(NmtError::InvalidConfig("layers must be ≥ 1".into()));
        }
        if self.model_dim == 0 || self.heads == 0 || self.model_dim % self.heads != 0 {
            return Err(NmtError::InvalidConfig(format!(
                "model_dim {} must be a positive multiple of heads {}",
                self.model_dim, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NmtError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.max_len < 2 {
            return Err(NmtError::InvalidConfig("max_len must be ≥ 2".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Token-level batch size: a batch holds sentences until their padded
    /// token cost reaches this budget.
    pub batch_tokens: usize,
    pub warmup_steps: u64,
    pub lr_const: f64,
    pub max_steps: u64,
    /// Overrides the model's dropout for this run when set.
    pub dropout: Option<f64>,
    pub label_smoothing: f64,
    pub seed: u64,
    /// Emit a log record every this many steps (and at the final step).
    pub log_every: u64,
}

impl TrainConfig {
    pub fn desk(max_steps: u64, seed: u64) -> Self {
        TrainConfig {
            batch_tokens: 1024,
            warmup_steps: 400,
            lr_const: 2.0,
            max_steps,
            dropout: None,
            label_smoothing: 0.1,
            seed,
            log_every: 50,
        }
    }

    /// The original setting: 4096-token batches, 8000 warmup steps,
    /// learning-rate constant 2, dropout 0.3.
    pub fn paper(max_steps: u64, seed: u64) -> Self {
        TrainConfig {
            batch_tokens: 4096,
            warmup_steps: 8000,
            lr_const: 2.0,
            max_steps,
            dropout: Some(0.3),
            label_smoothing: 0.1,
            seed,
            log_every: 100,
        }
    }

    pub fn validate(&self) -> Result<(), NmtError> {
        if self.warmup_steps == 0 {
            return Err(NmtError::InvalidConfig("warmup_steps must be ≥ 1".into()));
        }
        if self.batch_tokens == 0 {
            return Err(NmtError::InvalidConfig("batch_tokens must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(NmtError::InvalidConfig(format!(
                "label_smoothing {} outside [0, 1)",
                self.label_smoothing
            )));
        }
        Ok(())
    }
}

/// Learning rate at (1-based) step `s`: linear warmup, then inverse square
/// root, scaled by `lr_const · model_dim^(−1/2)`.
pub fn learning_rate(lr_const: f64, model_dim: usize, warmup_steps: u64, step: u64) -> f64 {
    let s = step.max(1) as f64;
    let w = warmup_steps as f64;
    lr_const * (model_dim as f64).powf(-0.5) * (s * w.powf(-1.5)).min(s.powf(-0.5))
}
