//! Encoder-only transformer with optional banded self-attention, a tied
//! masked-language-model head, and pooled task heads.

pub mod checkpoint;
pub mod config;
pub mod model;
pub mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::ModelConfig;
pub use model::{
    additive_mask, attention, attention_reach, band_mask, encoder_forward, mlm_logits, mlm_loss,
    pool, PoolMode, BAND_PENALTY,
};
pub use params::{expected_shapes, ModelParams};
