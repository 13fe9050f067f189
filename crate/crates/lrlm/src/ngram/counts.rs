//! Exact n-gram counting with per-order sentence padding.

use std::collections::HashMap;

use crate::corpus::{BOS_ID, EOS_ID};
use crate::{Error, Result};

/// Exact counts for all n-grams of orders 1..=order.
///
/// Sentences are padded per order: order n sees n−1 leading BOS tokens and
/// one trailing EOS. Unigrams therefore never contain BOS, and every counted
/// n-gram's (n−1)-suffix is itself a counted (n−1)-gram, which is the
/// closure backoff estimation relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    order: usize,
    tables: Vec<HashMap<Vec<u32>, u64>>,
}

/// Counts all n-grams of orders 1..=order over the corpus.
pub fn count(corpus: &[Vec<u32>], order: usize) -> Result<NgramCounts> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "count: order must be at least 1".to_string(),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(
            "n-gram counting needs at least one sentence",
        ));
    }
    let mut tables = vec![HashMap::new(); order];
    for sentence in corpus {
        for n in 1..=order {
            let mut padded = Vec::with_capacity(sentence.len() + n);
            padded.extend(std::iter::repeat_n(BOS_ID, n - 1));
            padded.extend_from_slice(sentence);
            padded.push(EOS_ID);
            for window in padded.windows(n) {
                *tables[n - 1].entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }
    Ok(NgramCounts { order, tables })
}

impl NgramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Count table for n-grams of order `n` (1-based).
    pub fn table(&self, n: usize) -> &HashMap<Vec<u32>, u64> {
        &self.tables[n - 1]
    }

    pub fn get(&self, ngram: &[u32]) -> u64 {
        self.tables[ngram.len() - 1]
            .get(ngram)
            .copied()
            .unwrap_or(0)
    }

    #[cfg(test)]
    pub(crate) fn bump(&mut self, ngram: &[u32], delta: u64) {
        *self.tables[ngram.len() - 1]
            .entry(ngram.to_vec())
            .or_insert(0) += delta;
    }
}
