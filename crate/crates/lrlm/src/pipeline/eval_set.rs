use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::MASK_ID;
use crate::Result;

/// How many held-out sentences feed the evaluation set by default.
pub const DEFAULT_EVAL_LIMIT: usize = 100;

/// One evaluation example: the full sentence with a single position masked,
/// plus enough provenance to stratify results afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub sentence: usize,
    pub position: usize,
    pub tokens: Vec<u32>,
    pub gold: u32,
}

/// For each of the first `limit` sentences, emits one item per position
/// with exactly that position masked; the gold label is the original token.
/// Together the items cover every position of those sentences exactly once.
pub fn build_eval_set(sentences: &[Vec<u32>], limit: usize) -> Vec<EvalItem> {
    let mut items = Vec::new();
    for (s, sentence) in sentences.iter().take(limit).enumerate() {
        for (pos, &gold) in sentence.iter().enumerate() {
            let mut tokens = sentence.clone();
            tokens[pos] = MASK_ID;
            items.push(EvalItem {
                sentence: s,
                position: pos,
                tokens,
                gold,
            });
        }
    }
    items
}

pub fn write_eval_jsonl<W: Write>(items: &[EvalItem], writer: &mut W) -> Result<()> {
    super::write_jsonl(items, writer)
}

pub fn read_eval_jsonl<R: BufRead>(reader: R) -> Result<Vec<EvalItem>> {
    super::read_jsonl(reader)
}
