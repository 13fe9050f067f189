//! SLM-distilled soft labels: window scores over the whole vocabulary are
//! min-max normalized, truncated to the top k, sharpened by a power
//! transform, and renormalized into sparse target distributions that a
//! transformer can train against instead of one-hot labels.

mod label;
mod store;

pub use label::{
    build_soft_label, interpolate_hard, soft_label_from_scores, SoftLabel, DEFAULT_HARDNESS,
    DEFAULT_TOP_K,
};
pub use store::{build_label_set, SoftLabelRecord, SoftLabelSet, StoreProvenance};
