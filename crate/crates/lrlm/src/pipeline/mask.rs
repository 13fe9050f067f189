use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::NUM_SPECIALS;
use crate::{Error, Result};

/// Fraction of eligible positions selected for prediction.
pub const DEFAULT_MASK_RATE: f64 = 0.15;

const MASK_SHARE: f64 = 0.8;
const RANDOM_SHARE: f64 = 0.1;

/// What happens to a selected position in the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskAction {
    /// Replace with the mask token.
    Mask,
    /// Replace with a random non-special token.
    Random,
    /// Leave the original token in place.
    Keep,
}

/// One selected position: which row and slot, how the input is perturbed,
/// and the original id the model must recover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub sentence: usize,
    pub position: usize,
    pub action: MaskAction,
    pub target: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<u32>,
}

/// The full selection for one batch of rows, serializable for audit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskPlan {
    pub entries: Vec<MaskEntry>,
}

impl MaskPlan {
    pub fn write_jsonl<W: Write>(&self, writer: &mut W) -> Result<()> {
        super::write_jsonl(&self.entries, writer)
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<MaskPlan> {
        Ok(MaskPlan {
            entries: super::read_jsonl(reader)?,
        })
    }
}

/// Selects each non-pad, non-special position of `rows` independently with
/// probability `rate`, then splits the selections 80/10/10 across
/// mask/random/keep. Random replacements are drawn uniformly from the
/// non-special ids below `vocab_size`. Deterministic given the rng state;
/// positions are visited row by row, left to right.
pub fn make_mask_plan(
    rows: &[Vec<u32>],
    vocab_size: usize,
    rate: f64,
    rng: &mut impl Rng,
) -> Result<MaskPlan> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mask rate must lie strictly between 0 and 1, got {rate}"
        )));
    }
    if vocab_size <= NUM_SPECIALS {
        return Err(Error::InvalidArgument(
            "vocabulary has no non-special tokens to sample replacements from".into(),
        ));
    }
    let mut entries = Vec::new();
    for (sentence, row) in rows.iter().enumerate() {
        for (position, &id) in row.iter().enumerate() {
            if (id as usize) < NUM_SPECIALS {
                continue;
            }
            if rng.gen::<f64>() >= rate {
                continue;
            }
            let split = rng.gen::<f64>();
            let (action, replacement) = if split < MASK_SHARE {
                (MaskAction::Mask, None)
            } else if split < MASK_SHARE + RANDOM_SHARE {
                let pick = rng.gen_range(NUM_SPECIALS as u32..vocab_size as u32);
                (MaskAction::Random, Some(pick))
            } else {
                (MaskAction::Keep, None)
            };
            entries.push(MaskEntry {
                sentence,
                position,
                action,
                target: id,
                replacement,
            });
        }
    }
    Ok(MaskPlan { entries })
}

impl MaskPlan {
    /// Positions are unique because each slot is visited once; exposed for
    /// validating plans read back from disk.
    pub fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert((entry.sentence, entry.position)) {
                return Err(Error::InvalidArgument(format!(
                    "mask plan selects sentence {}, position {} twice",
                    entry.sentence, entry.position
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EOS_ID, PAD_ID};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const VOCAB: usize = 60;

    fn plain_rows(rows: usize, cols: usize) -> Vec<Vec<u32>> {
        (0..rows)
            .map(|r| {
                (0..cols)
                    .map(|c| {
                        NUM_SPECIALS as u32 + ((r * cols + c) % (VOCAB - NUM_SPECIALS)) as u32
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn rate_bounds_are_enforced() {
        let rows = plain_rows(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for rate in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                make_mask_plan(&rows, VOCAB, rate, &mut rng),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn special_only_vocabulary_is_rejected() {
        let rows = plain_rows(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            make_mask_plan(&rows, NUM_SPECIALS, 0.15, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn identical_seeds_give_identical_plans() {
        let rows = plain_rows(8, 16);
        let a = make_mask_plan(&rows, VOCAB, 0.15, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = make_mask_plan(&rows, VOCAB, 0.15, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let c = make_mask_plan(&rows, VOCAB, 0.15, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pad_and_special_positions_are_never_selected() {
        let rows = vec![
            vec![6, EOS_ID, 7, PAD_ID],
            vec![PAD_ID, PAD_ID, PAD_ID, PAD_ID],
            vec![8, 9, EOS_ID, PAD_ID],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let plan = make_mask_plan(&rows, VOCAB, 0.5, &mut rng).unwrap();
            for entry in &plan.entries {
                let id = rows[entry.sentence][entry.position];
                assert!(id as usize >= NUM_SPECIALS);
                assert_eq!(entry.target, id);
            }
        }
    }

    #[test]
    fn all_pad_rows_give_an_empty_plan() {
        let rows = vec![vec![PAD_ID; 8]; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = make_mask_plan(&rows, VOCAB, 0.9, &mut rng).unwrap();
        assert!(plan.entries.is_empty());
    }

    #[test]
    fn selection_rate_is_close_to_requested() {
        let rows = plain_rows(3125, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let plan = make_mask_plan(&rows, VOCAB, 0.15, &mut rng).unwrap();
        let fraction = plan.entries.len() as f64 / (3125.0 * 32.0);
        assert!(
            (fraction - 0.15).abs() < 0.01,
            "selected fraction {fraction}"
        );
    }

    #[test]
    fn actions_split_eighty_ten_ten() {
        let rows = plain_rows(3125, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let plan = make_mask_plan(&rows, VOCAB, 0.15, &mut rng).unwrap();
        let total = plan.entries.len() as f64;
        let count = |a: MaskAction| {
            plan.entries.iter().filter(|e| e.action == a).count() as f64 / total
        };
        assert!((count(MaskAction::Mask) - 0.8).abs() < 0.02);
        assert!((count(MaskAction::Random) - 0.1).abs() < 0.015);
        assert!((count(MaskAction::Keep) - 0.1).abs() < 0.015);
        for entry in &plan.entries {
            match entry.action {
                MaskAction::Random => {
                    let r = entry.replacement.expect("random entries carry a pick");
                    assert!((r as usize) >= NUM_SPECIALS && (r as usize) < VOCAB);
                }
                _ => assert!(entry.replacement.is_none()),
            }
        }
    }

    #[test]
    fn positions_are_unique_per_sentence() {
        let rows = plain_rows(64, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = make_mask_plan(&rows, VOCAB, 0.4, &mut rng).unwrap();
        plan.check_unique().unwrap();
        let mut doubled = plan.clone();
        doubled.entries.push(plan.entries[0].clone());
        assert!(matches!(
            doubled.check_unique(),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn jsonl_round_trip_preserves_the_plan() {
        let rows = plain_rows(8, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let plan = make_mask_plan(&rows, VOCAB, 0.3, &mut rng).unwrap();
        assert!(!plan.entries.is_empty());
        let mut buf = Vec::new();
        plan.write_jsonl(&mut buf).unwrap();
        let back = MaskPlan::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn jsonl_comment_lines_are_ignored() {
        let rows = plain_rows(4, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let plan = make_mask_plan(&rows, VOCAB, 0.3, &mut rng).unwrap();
        let mut buf = Vec::new();
        plan.write_jsonl(&mut buf).unwrap();
        let stamped = format!("# a header line\n{}", String::from_utf8(buf).unwrap());
        let back = MaskPlan::read_jsonl(stamped.as_bytes()).unwrap();
        assert_eq!(back, plan);
    }
}
