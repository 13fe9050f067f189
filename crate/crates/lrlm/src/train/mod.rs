//! Masked-language-model pretraining and task fine-tuning.
//!
//! Training strategies live behind the [`TrainingMode`] trait and are looked
//! up by name, so the sliding-window, banded-attention and distillation
//! variants share one training loop that differs only in how examples are
//! built and batches drawn. Runs are deterministic in the configured seed:
//! parameter init, batch sampling and dropout each use an independent
//! stream derived from it.

mod config;
mod finetune;
mod loss;
mod modes;
mod pretrain;
mod stopper;

pub use config::{
    TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_PATIENCE, DESK_EVAL_EVERY, FINETUNE_LR, PRETRAIN_LR,
};
pub use finetune::{
    classify_pair, finetune_pairs, finetune_tags, pair_probabilities, pair_tokens, read_conll,
    read_pairs_tsv, tag_words, FinetuneConfig, PairExample, TagExample, PAIR_LABELS,
};
pub use loss::{mlm_batch_loss, target_rows};
pub use modes::{mode_by_name, training_modes, TrainData, TrainingMode};
pub use pretrain::{
    pretrain, split_validation, validation_accuracy, write_log_tsv, CorpusSplit, EvalRecord,
    PretrainOutcome,
};
pub use stopper::{EarlyStopper, StopDecision};
