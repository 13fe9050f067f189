//! Architecture hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder architecture description. `half_width` of `None` means full
/// attention; `Some(h)` keeps score (i, j) only when `|i - j| <= h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub dim: usize,
    pub ffn_dim: usize,
    pub max_seq: usize,
    pub dropout: f64,
    pub half_width: Option<usize>,
    pub vocab: usize,
}

impl ModelConfig {
    /// Small configuration that trains in minutes on a CPU.
    pub fn desk(vocab: usize) -> Self {
        ModelConfig {
            layers: 2,
            heads: 4,
            dim: 64,
            ffn_dim: 256,
            max_seq: 32,
            dropout: 0.1,
            half_width: None,
            vocab,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.dim == 0 || self.ffn_dim == 0 || self.vocab == 0 {
            return Err(Error::InvalidArgument(
                "heads, dim, ffn_dim and vocab must all be positive".to_string(),
            ));
        }
        if self.max_seq < 1 {
            return Err(Error::InvalidArgument(
                "max_seq must be at least 1".to_string(),
            ));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::InvalidArgument(format!(
                "dim {} is not divisible by heads {}",
                self.dim, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Converts a symmetric context size in tokens (an odd number: the
    /// center plus `h` neighbors on each side) into an attention half-width.
    pub fn half_width_for_context(context: usize) -> Result<usize> {
        if context == 0 || context.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "context size must be odd and positive, got {context}"
            )));
        }
        Ok((context - 1) / 2)
    }
}
