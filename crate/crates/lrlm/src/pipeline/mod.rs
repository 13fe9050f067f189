//! Training and evaluation input construction: continuous token streams,
//! random masking plans, sliding-window examples, and one-mask-at-a-time
//! evaluation sets.
//!
//! Everything here is deterministic given the caller's RNG state, and mask
//! plans and eval sets serialize as JSON-lines so a run's inputs can be
//! audited after the fact. Inputs longer than a model's declared context are
//! never truncated silently; `check_context_length` rejects them unless
//! long-input mode is explicit.

mod batch;
mod eval_set;
mod mask;
mod stream;
mod window;

pub use batch::{check_context_length, Batch, BatchTargets};
pub use eval_set::{build_eval_set, read_eval_jsonl, write_eval_jsonl, EvalItem, DEFAULT_EVAL_LIMIT};
pub use mask::{make_mask_plan, MaskAction, MaskEntry, MaskPlan, DEFAULT_MASK_RATE};
pub use stream::{build_streams, DEFAULT_BLOCK_LEN};
pub use window::{build_windows, window_at, WindowExample};

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Result;

pub(crate) fn write_jsonl<T: Serialize, W: Write>(items: &[T], writer: &mut W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *writer, item)?;
        writeln!(writer)?;
    }
    Ok(())
}

pub(crate) fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut items = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        items.push(serde_json::from_str(&line)?);
    }
    Ok(items)
}
