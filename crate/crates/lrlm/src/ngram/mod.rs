//! Trigram statistical language model: counting, Kneser-Ney smoothing,
//! sequence and window scoring, and ARPA persistence.

mod arpa;
mod counts;
mod model;
mod smoothing;

pub use arpa::{read_arpa, write_arpa};
pub use counts::{count, NgramCounts};
pub use model::NgramModel;
pub use smoothing::estimate;
