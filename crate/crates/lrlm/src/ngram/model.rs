//! Backoff model over token ids: stored log10 conditionals plus
//! history-indexed backoff weights, with window scoring and masked-word
//! prediction on top.

use std::collections::HashMap;

use crate::corpus::{Vocabulary, BOS_ID, EOS_ID, UNK_ID};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub(crate) logp: f64,
    pub(crate) logbo: Option<f64>,
}

/// Smoothed n-gram language model. Conditional probabilities are stored for
/// every counted n-gram; unseen extensions resolve through per-history
/// backoff weights. All probabilities are log10.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    tables: Vec<HashMap<Vec<u32>, Entry>>,
}

impl NgramModel {
    pub(crate) fn from_tables(order: usize, tables: Vec<HashMap<Vec<u32>, Entry>>) -> NgramModel {
        debug_assert_eq!(tables.len(), order);
        NgramModel { order, tables }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored entries of order `n`, sorted by id tuple:
    /// (ngram, log10 prob, log10 backoff weight).
    pub fn entries(&self, n: usize) -> Vec<(Vec<u32>, f64, Option<f64>)> {
        let mut rows: Vec<(Vec<u32>, f64, Option<f64>)> = self.tables[n - 1]
            .iter()
            .map(|(k, e)| (k.clone(), e.logp, e.logbo))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }

    /// log10 p(word | history), resolved through backoff. Histories longer
    /// than order−1 are truncated on the left. Ids are taken as-is; an id
    /// with no unigram entry resolves to −inf.
    pub fn cond_logprob(&self, history: &[u32], word: u32) -> f64 {
        let start = history.len().saturating_sub(self.order - 1);
        let mut seq: Vec<u32> = history[start..].to_vec();
        seq.push(word);
        self.resolve(&seq, seq.len() - 1)
    }

    fn known_or_unk(&self, id: u32) -> u32 {
        if self.tables[0].contains_key([id].as_slice()) {
            id
        } else {
            UNK_ID
        }
    }

    /// log10 p(seq[target] | preceding order−1 tokens of seq).
    fn resolve(&self, seq: &[u32], target: usize) -> f64 {
        let n = self.order.min(target + 1);
        let start = target + 1 - n;
        let mut acc = 0.0;
        for level in 0..n {
            let key = &seq[start + level..=target];
            if let Some(e) = self.tables[key.len() - 1].get(key) {
                return acc + e.logp;
            }
            if key.len() > 1 {
                let h = &key[..key.len() - 1];
                acc += self.tables[h.len() - 1]
                    .get(h)
                    .and_then(|e| e.logbo)
                    .unwrap_or(0.0);
            }
        }
        f64::NEG_INFINITY
    }

    fn pad(&self, tokens: &[u32]) -> Vec<u32> {
        let mut padded = Vec::with_capacity(tokens.len() + self.order);
        padded.extend(std::iter::repeat_n(BOS_ID, self.order - 1));
        padded.extend(tokens.iter().map(|&t| self.known_or_unk(t)));
        padded.push(EOS_ID);
        padded
    }

    /// log10 probability of the whole sentence including its EOS, with BOS
    /// padding. Ids without a unigram entry are scored as UNK.
    pub fn score(&self, tokens: &[u32]) -> f64 {
        let padded = self.pad(tokens);
        (self.order - 1..padded.len())
            .map(|i| self.resolve(&padded, i))
            .sum()
    }

    /// Sum of the log10 probabilities of the `order` n-grams whose window
    /// covers `pos`, with `candidate` substituted there; the window set is
    /// clamped at the sequence edges.
    pub fn window_score(&self, tokens: &[u32], pos: usize, candidate: u32) -> f64 {
        self.window_scores(tokens, pos, &[candidate])[0]
    }

    /// Window scores for many candidates at one position.
    pub fn window_scores(&self, tokens: &[u32], pos: usize, candidates: &[u32]) -> Vec<f64> {
        assert!(pos < tokens.len(), "window position out of range");
        let mut padded = self.pad(tokens);
        let p = pos + self.order - 1;
        let hi = (p + self.order - 1).min(padded.len() - 1);
        candidates
            .iter()
            .map(|&c| {
                padded[p] = self.known_or_unk(c);
                (p..=hi).map(|j| self.resolve(&padded, j)).sum()
            })
            .collect()
    }

    /// Highest-scoring non-special replacement for `tokens[pos]`; ties go
    /// to the lowest token id.
    pub fn predict_mask(&self, tokens: &[u32], pos: usize, vocab: &Vocabulary) -> u32 {
        let candidates: Vec<u32> = vocab.non_special_ids().collect();
        assert!(!candidates.is_empty(), "vocabulary has no non-special tokens");
        let scores = self.window_scores(tokens, pos, &candidates);
        let mut best = 0;
        for i in 1..candidates.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        candidates[best]
    }
}
