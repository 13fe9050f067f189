//! Measurement suite over both model families.
//!
//! Every metric is phrased against [`Predictor`] — "rank the replacements
//! for this masked slot" — so the n-gram model and any transformer
//! checkpoint are scored by exactly the same code: overall masked-LM
//! accuracy, accuracy per training-frequency bin, and word completion.
//! Downstream task accuracy wraps fine-tuned classifier and tagger
//! outputs. Items are independent and aggregation is a single ordered
//! pass, so results are deterministic for a given predictor and eval set.

mod metrics;
mod predictor;
mod report;

pub use metrics::{
    bin_accuracy, mlm_accuracy, pair_accuracy, predictions, tag_accuracy, word_completion,
    BinAccuracy, CompletionContext,
};
pub use predictor::{NgramPredictor, Predictor, TransformerPredictor};
pub use report::{reports_to_tsv, EvalReport};
