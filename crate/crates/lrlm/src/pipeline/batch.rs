use std::collections::HashSet;

use crate::corpus::{MASK_ID, NUM_SPECIALS, PAD_ID};
use crate::distill::SoftLabel;
use crate::pipeline::{MaskAction, MaskPlan, WindowExample};
use crate::{Error, Result};

/// Prediction targets for the masked positions of a batch; hard ids and soft
/// labels never coexist. Soft targets keep the gold id alongside the label
/// so the loss can interpolate the two.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchTargets {
    Hard(Vec<u32>),
    Soft(Vec<(u32, SoftLabel)>),
}

impl BatchTargets {
    pub fn len(&self) -> usize {
        match self {
            BatchTargets::Hard(t) => t.len(),
            BatchTargets::Soft(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One training unit: perturbed token rows, their pad mask, the positions
/// the model must predict, and the targets at those positions (parallel to
/// `masks`).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub tokens: Vec<Vec<u32>>,
    pub pad: Vec<Vec<bool>>,
    pub masks: Vec<(usize, usize)>,
    pub targets: BatchTargets,
}

impl Batch {
    /// Applies a mask plan to unperturbed rows: mask entries become MASK,
    /// random entries take their sampled replacement, keep entries stay.
    /// Targets are the original ids. The plan must have been drawn from
    /// these rows; mismatches are rejected rather than silently applied.
    pub fn from_plan(rows: &[Vec<u32>], plan: &MaskPlan) -> Result<Batch> {
        let mut tokens: Vec<Vec<u32>> = rows.to_vec();
        let pad = pad_mask(rows);
        let mut masks = Vec::with_capacity(plan.entries.len());
        let mut targets = Vec::with_capacity(plan.entries.len());
        plan.check_unique()?;
        for entry in &plan.entries {
            let row = rows.get(entry.sentence).ok_or(Error::PositionOutOfRange {
                sentence: entry.sentence,
                position: entry.position,
                len: 0,
            })?;
            if entry.position >= row.len() {
                return Err(Error::PositionOutOfRange {
                    sentence: entry.sentence,
                    position: entry.position,
                    len: row.len(),
                });
            }
            let original = row[entry.position];
            if original != entry.target || (original as usize) < NUM_SPECIALS {
                return Err(Error::InvalidArgument(format!(
                    "mask plan does not match rows at sentence {}, position {}",
                    entry.sentence, entry.position
                )));
            }
            match entry.action {
                MaskAction::Mask => tokens[entry.sentence][entry.position] = MASK_ID,
                MaskAction::Random => {
                    let pick = entry.replacement.ok_or_else(|| {
                        Error::InvalidArgument(
                            "random mask entry carries no replacement id".into(),
                        )
                    })?;
                    tokens[entry.sentence][entry.position] = pick;
                }
                MaskAction::Keep => {}
            }
            masks.push((entry.sentence, entry.position));
            targets.push(entry.target);
        }
        let batch = Batch {
            tokens,
            pad,
            masks,
            targets: BatchTargets::Hard(targets),
        };
        batch.validate()?;
        Ok(batch)
    }

    /// Packs window examples into a batch: one row per example, the mask at
    /// the shared center position, hard targets from the examples.
    pub fn from_windows(examples: &[WindowExample]) -> Result<Batch> {
        let mut tokens = Vec::with_capacity(examples.len());
        let mut masks = Vec::with_capacity(examples.len());
        let mut targets = Vec::with_capacity(examples.len());
        for (row, example) in examples.iter().enumerate() {
            let center = (example.tokens.len() - 1) / 2;
            tokens.push(example.tokens.clone());
            masks.push((row, center));
            targets.push(example.target);
        }
        let pad = pad_mask(&tokens);
        let batch = Batch {
            tokens,
            pad,
            masks,
            targets: BatchTargets::Hard(targets),
        };
        batch.validate()?;
        Ok(batch)
    }

    /// Swaps hard targets for soft labels, one per masked position; the
    /// hard ids stay paired with their labels for interpolation.
    pub fn with_soft_targets(mut self, labels: Vec<SoftLabel>) -> Result<Batch> {
        if labels.len() != self.masks.len() {
            return Err(Error::ShapeMismatch {
                op: "with_soft_targets",
                details: format!(
                    "{} labels for {} masked positions",
                    labels.len(),
                    self.masks.len()
                ),
            });
        }
        let golds = match &self.targets {
            BatchTargets::Hard(t) => t.clone(),
            BatchTargets::Soft(t) => t.iter().map(|&(g, _)| g).collect(),
        };
        self.targets = BatchTargets::Soft(golds.into_iter().zip(labels).collect());
        Ok(self)
    }

    /// Structural invariants: uniform row length, pad mask congruent with
    /// the rows, every masked position in range, non-pad, and unique, and
    /// one target per masked position.
    pub fn validate(&self) -> Result<()> {
        let cols = self.tokens.first().map_or(0, Vec::len);
        if self.tokens.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                op: "batch",
                details: "rows have unequal lengths".into(),
            });
        }
        if self.pad.len() != self.tokens.len() || self.pad.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                op: "batch",
                details: "pad mask shape differs from token rows".into(),
            });
        }
        let mut seen = HashSet::new();
        for &(row, col) in &self.masks {
            if row >= self.tokens.len() || col >= cols {
                return Err(Error::PositionOutOfRange {
                    sentence: row,
                    position: col,
                    len: cols,
                });
            }
            if self.pad[row][col] {
                return Err(Error::InvalidArgument(format!(
                    "masked position ({row}, {col}) points at padding"
                )));
            }
            if !seen.insert((row, col)) {
                return Err(Error::InvalidArgument(format!(
                    "masked position ({row}, {col}) listed twice"
                )));
            }
        }
        if self.targets.len() != self.masks.len() {
            return Err(Error::ShapeMismatch {
                op: "batch",
                details: format!(
                    "{} targets for {} masked positions",
                    self.targets.len(),
                    self.masks.len()
                ),
            });
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.tokens.len()
    }

    pub fn cols(&self) -> usize {
        self.tokens.first().map_or(0, Vec::len)
    }
}

fn pad_mask(rows: &[Vec<u32>]) -> Vec<Vec<bool>> {
    rows.iter()
        .map(|row| row.iter().map(|&id| id == PAD_ID).collect())
        .collect()
}

/// Guard for feeding an input to a model pretrained with a fixed context:
/// inputs longer than the declared context are rejected unless long-input
/// mode is explicitly enabled. Inputs are never truncated silently.
pub fn check_context_length(len: usize, context: Option<usize>, long_input: bool) -> Result<()> {
    match context {
        Some(max) if len > max && !long_input => Err(Error::SequenceTooLong { len, max }),
        _ => Ok(()),
    }
}
