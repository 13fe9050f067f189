use std::collections::BTreeMap;

use rand::Rng;

use crate::distill::interpolate_hard;
use crate::numerics::{Params, Scalar, Tape, Tensor, Var};
use crate::pipeline::{Batch, BatchTargets};
use crate::transformer::{mlm_loss, ModelConfig};
use crate::{Error, Result};

/// Densifies the batch targets into one probability row per masked
/// position, in mask-list order. Hard targets become one-hot rows; soft
/// targets are interpolated with their gold one-hot at weight `lambda`.
pub fn target_rows(batch: &Batch, lambda: f64, vocab: usize) -> Result<Vec<Vec<f64>>> {
    match &batch.targets {
        BatchTargets::Hard(ids) => ids
            .iter()
            .map(|&id| {
                if (id as usize) >= vocab {
                    return Err(Error::InvalidArgument(format!(
                        "target id {id} outside vocabulary of size {vocab}"
                    )));
                }
                let mut row = vec![0.0; vocab];
                row[id as usize] = 1.0;
                Ok(row)
            })
            .collect(),
        BatchTargets::Soft(pairs) => pairs
            .iter()
            .map(|(gold, label)| interpolate_hard(label, *gold, lambda, vocab))
            .collect(),
    }
}

/// Mean masked-position cross-entropy over the whole batch: each row is
/// encoded separately and its per-position losses are weighted so every
/// masked position in the batch counts equally. Returns `None` when the
/// batch has no masked positions (the loss over an empty set is zero).
#[allow(clippy::too_many_arguments)]
pub fn mlm_batch_loss<T: Scalar, R: Rng>(
    tape: &Tape<T>,
    config: &ModelConfig,
    params: &Params<T>,
    batch: &Batch,
    lambda: f64,
    train_mode: bool,
    rng: &mut R,
) -> Result<Option<Var>> {
    batch.validate()?;
    if batch.masks.is_empty() {
        return Ok(None);
    }
    let rows = target_rows(batch, lambda, config.vocab)?;
    let mut by_row: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(row, _)) in batch.masks.iter().enumerate() {
        by_row.entry(row).or_default().push(i);
    }
    let total = batch.masks.len() as f64;
    let mut combined: Option<Var> = None;
    for (row, mask_indices) in by_row {
        let positions: Vec<usize> = mask_indices.iter().map(|&i| batch.masks[i].1).collect();
        let mut data = Vec::with_capacity(mask_indices.len() * config.vocab);
        for &i in &mask_indices {
            data.extend(rows[i].iter().map(|&p| T::from_f64(p)));
        }
        let targets = Tensor::from_vec(&[mask_indices.len(), config.vocab], data)?;
        let loss = mlm_loss(
            tape,
            config,
            params,
            &batch.tokens[row],
            &batch.pad[row],
            &positions,
            &targets,
            train_mode,
            rng,
        )?;
        let weighted = tape.scale(loss, mask_indices.len() as f64 / total);
        combined = Some(match combined {
            None => weighted,
            Some(acc) => tape.add(acc, weighted)?,
        });
    }
    Ok(combined)
}
