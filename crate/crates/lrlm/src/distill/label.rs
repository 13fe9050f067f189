use serde::{Deserialize, Serialize};

use crate::corpus::{Vocabulary, NUM_SPECIALS};
use crate::ngram::NgramModel;
use crate::{Error, Result};

/// Power-transform exponent applied to normalized scores.
pub const DEFAULT_HARDNESS: u32 = 6;
/// Candidates kept after normalization; the rest are zeroed.
pub const DEFAULT_TOP_K: usize = 100;

const SUM_TOLERANCE: f64 = 1e-6;

/// Sparse target distribution over non-special token ids, distilled from
/// SLM window scores. Entries are sorted by descending probability, ties by
/// ascending id; zero-probability candidates are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel {
    pub entries: Vec<(u32, f64)>,
    pub hardness: u32,
}

impl SoftLabel {
    /// Highest-probability token id; ties already resolved to the lowest id
    /// by the entry ordering.
    pub fn argmax(&self) -> u32 {
        self.entries[0].0
    }

    pub fn prob(&self, id: u32) -> f64 {
        self.entries
            .iter()
            .find(|&&(e, _)| e == id)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Checks the type invariants: nonempty, probabilities in (0, 1] summing
    /// to 1, unique non-special ids, and the sort order above.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidArgument("soft label has no entries".into()));
        }
        if self.hardness == 0 {
            return Err(Error::InvalidArgument(
                "soft label hardness must be positive".into(),
            ));
        }
        let mut sum = 0.0;
        for (i, &(id, p)) in self.entries.iter().enumerate() {
            if (id as usize) < NUM_SPECIALS {
                return Err(Error::InvalidArgument(format!(
                    "soft label contains special token id {id}"
                )));
            }
            if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "soft label probability {p} for id {id} outside (0, 1]"
                )));
            }
            if i > 0 {
                let (prev_id, prev_p) = self.entries[i - 1];
                let ordered = p < prev_p || (p == prev_p && id > prev_id);
                if !ordered {
                    return Err(Error::InvalidArgument(
                        "soft label entries out of order".into(),
                    ));
                }
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "soft label probabilities sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Builds a soft label from raw candidate scores: min-max normalize, keep
/// the `top_k` highest (ties to the lower id), raise survivors to the
/// `hardness` power, and renormalize to sum 1. If every score is equal the
/// min-max step is degenerate and the label is uniform over the first
/// `top_k` candidates by id. `candidates` must be strictly ascending
/// non-special ids; scores are positionally parallel.
pub fn soft_label_from_scores(
    candidates: &[u32],
    scores: &[f64],
    hardness: u32,
    top_k: usize,
) -> Result<SoftLabel> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(
            "no candidate tokens to build a soft label from".into(),
        ));
    }
    if candidates.len() != scores.len() {
        return Err(Error::ShapeMismatch {
            op: "soft_label_from_scores",
            details: format!("{} candidates, {} scores", candidates.len(), scores.len()),
        });
    }
    if hardness == 0 {
        return Err(Error::InvalidArgument("hardness must be positive".into()));
    }
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be positive".into()));
    }
    if (candidates[0] as usize) < NUM_SPECIALS {
        return Err(Error::InvalidArgument(
            "soft label candidates must exclude special tokens".into(),
        ));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "soft label candidates must be strictly ascending ids".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "soft label scores must be finite".into(),
        ));
    }

    let keep = top_k.min(candidates.len());
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        let p = 1.0 / keep as f64;
        let entries = candidates[..keep].iter().map(|&id| (id, p)).collect();
        return Ok(SoftLabel { entries, hardness });
    }

    let mut ranked: Vec<(u32, f64)> = candidates
        .iter()
        .zip(scores)
        .map(|(&id, &s)| (id, (s - min) / (max - min)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(keep);

    let weights: Vec<f64> = ranked
        .iter()
        .map(|&(_, x)| x.powi(hardness as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let entries: Vec<(u32, f64)> = ranked
        .iter()
        .zip(&weights)
        .filter(|&(_, &w)| w > 0.0)
        .map(|(&(id, _), &w)| (id, w / total))
        .collect();
    Ok(SoftLabel { entries, hardness })
}

/// Scores every non-special vocabulary entry at `pos` with the SLM's window
/// score — the surrounding tokens must be the ground-truth sentence — and
/// distills the scores into a soft label.
pub fn build_soft_label(
    model: &NgramModel,
    tokens: &[u32],
    pos: usize,
    vocab: &Vocabulary,
    hardness: u32,
    top_k: usize,
) -> Result<SoftLabel> {
    assert!(pos < tokens.len(), "label position out of range");
    let candidates: Vec<u32> = vocab.non_special_ids().collect();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(
            "vocabulary contains no non-special tokens".into(),
        ));
    }
    let scores = model.window_scores(tokens, pos, &candidates);
    soft_label_from_scores(&candidates, &scores, hardness, top_k)
}

/// Densifies a soft label over the full vocabulary, mixing in the one-hot
/// gold distribution with weight `lambda`: λ=0 is the pure soft label, λ=1
/// the plain hard target.
pub fn interpolate_hard(
    label: &SoftLabel,
    gold: u32,
    lambda: f64,
    vocab_size: usize,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "interpolation weight must lie in [0, 1], got {lambda}"
        )));
    }
    if (gold as usize) >= vocab_size {
        return Err(Error::InvalidArgument(format!(
            "gold id {gold} outside vocabulary of size {vocab_size}"
        )));
    }
    let mut dense = vec![0.0; vocab_size];
    for &(id, p) in &label.entries {
        let slot = dense
            .get_mut(id as usize)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "soft label id {id} outside vocabulary of size {vocab_size}"
                ))
            })?;
        *slot += (1.0 - lambda) * p;
    }
    dense[gold as usize] += lambda;
    Ok(dense)
}
