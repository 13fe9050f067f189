//! Minimal dense-tensor math with reverse-mode automatic differentiation.
//!
//! The graph lives on a [`Tape`] that is rebuilt every step; trainable
//! tensors live in a [`Params`] container outside the tape. Everything is
//! generic over [`Scalar`], so models train in `f32` and gradient checks run
//! in `f64` on the same code.

pub mod adam;
pub mod gradcheck;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamState};
pub use gradcheck::grad_check;
pub use params::{Parameter, Params};
pub use scalar::Scalar;
pub use tape::{Tape, Var, CE_LOG_FLOOR};
pub use tensor::Tensor;
