//! Low-resource language modeling toolkit.
//!
//! Compares a smoothed trigram statistical language model (SLM) against a
//! small encoder-only transformer (NLM) on the masked-language-modeling task,
//! and implements three ways of closing the gap in low-data regimes:
//!
//! - **window** (`NLM-C`): limited-context sliding-window inputs with a
//!   single masked middle token,
//! - **banded** (`NLM-A`): a band-matrix additive attention mask that
//!   restricts self-attention to nearby positions,
//! - **distill** (`NLM-H`): soft target distributions distilled from the
//!   SLM's window scores.
//!
//! The crate is organized around the data flow: [`corpus`] produces tokens
//! and a vocabulary, [`ngram`] builds the SLM, [`distill`] turns SLM scores
//! into soft labels, [`numerics`] provides the tensor/autodiff core,
//! [`transformer`] the NLM, [`pipeline`] the batch construction, [`train`]
//! the pretraining/fine-tuning loops (one strategy per mode, selected by
//! name), and [`eval`] the measurement suite over a common [`eval::Predictor`]
//! interface.

pub mod corpus;
pub mod distill;
pub mod error;
pub mod eval;
pub mod ngram;
pub mod numerics;
pub mod pipeline;
pub mod train;
pub mod transformer;

pub use error::{Error, Result};
