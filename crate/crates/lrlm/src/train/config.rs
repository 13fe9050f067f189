use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Learning rate for masked-language-model pretraining.
pub const PRETRAIN_LR: f64 = 1e-4;
/// Learning rate for both fine-tuning tasks.
pub const FINETUNE_LR: f64 = 2.5e-5;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_PATIENCE: usize = 10;
/// Desk-scale evaluation cadence; paper-scale runs evaluate every 20000.
pub const DESK_EVAL_EVERY: usize = 200;

/// Everything a training loop needs beyond the model shape and the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Strategy name: one of the registered training modes.
    pub mode: String,
    /// Window width c for the window mode (odd, at least 3).
    pub context: Option<usize>,
    /// Band half-width h for the banded mode.
    pub half_width: Option<usize>,
    /// Distill-mode interpolation weight between the soft label (0) and the
    /// hard one-hot target (1).
    pub lambda: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub patience: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Pretraining defaults for the named mode at desk scale.
    pub fn pretrain(mode: &str, seed: u64) -> TrainConfig {
        TrainConfig {
            mode: mode.to_string(),
            context: None,
            half_width: None,
            lambda: 0.0,
            batch_size: DEFAULT_BATCH_SIZE,
            lr: PRETRAIN_LR,
            eval_every: DESK_EVAL_EVERY,
            patience: DEFAULT_PATIENCE,
            max_steps: 10_000,
            seed,
        }
    }

    /// Checks field ranges and that the mode's own knob is present.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument(
                "evaluation cadence must be positive".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max steps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        match self.mode.as_str() {
            "window" => {
                let c = self.context.ok_or_else(|| {
                    Error::InvalidArgument("window mode requires a context width".into())
                })?;
                if c < 3 || c % 2 == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "window context must be odd and at least 3, got {c}"
                    )));
                }
            }
            "banded"
                if self.half_width.is_none() => {
                    return Err(Error::InvalidArgument(
                        "banded mode requires a band half-width".into(),
                    ));
                }
            _ => {}
        }
        Ok(())
    }
}
