use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Vocabulary, NUM_SPECIALS};
use crate::ngram::NgramModel;
use crate::numerics::Tape;
use crate::train::{TrainConfig, TrainingMode};
use crate::transformer::{encoder_forward, mlm_logits, ModelParams};
use crate::{Error, Result};

/// Ranks replacements for a single masked slot. Both model families answer
/// the same question — "which token belongs here?" — so every metric is
/// written against this interface.
pub trait Predictor {
    /// Identifier printed in reports.
    fn name(&self) -> String;

    /// Every non-special token id, ranked best-first. The ranking is total
    /// and deterministic: score ties break toward the lower id.
    fn rank(&self, tokens: &[u32], position: usize) -> Result<Vec<u32>>;

    /// The top-ranked candidate.
    fn predict(&self, tokens: &[u32], position: usize) -> Result<u32> {
        self.rank(tokens, position)?.first().copied().ok_or_else(|| {
            Error::InvalidArgument("predictor returned no candidates".to_string())
        })
    }
}

/// Candidates sorted by descending score, ties by ascending id.
fn rank_by_score(candidates: Vec<u32>, scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(candidates[a].cmp(&candidates[b]))
    });
    order.into_iter().map(|i| candidates[i]).collect()
}

fn check_position(tokens: &[u32], position: usize) -> Result<()> {
    if position >= tokens.len() {
        return Err(Error::InvalidArgument(format!(
            "masked position {position} out of range for {} tokens",
            tokens.len()
        )));
    }
    Ok(())
}

/// Smoothed n-gram model scoring each candidate by the total log probability
/// of the n-gram windows that cover the masked slot.
pub struct NgramPredictor<'a> {
    model: &'a NgramModel,
    vocab: &'a Vocabulary,
}

impl<'a> NgramPredictor<'a> {
    pub fn new(model: &'a NgramModel, vocab: &'a Vocabulary) -> Self {
        NgramPredictor { model, vocab }
    }
}

impl Predictor for NgramPredictor<'_> {
    fn name(&self) -> String {
        format!("{}-gram-kneser-ney", self.model.order())
    }

    fn rank(&self, tokens: &[u32], position: usize) -> Result<Vec<u32>> {
        check_position(tokens, position)?;
        let candidates: Vec<u32> = self.vocab.non_special_ids().collect();
        let scores = self.model.window_scores(tokens, position, &candidates);
        Ok(rank_by_score(candidates, &scores))
    }
}

/// Transformer checkpoint scoring candidates by masked-LM logits. Inputs are
/// reshaped by the training mode first, so a window-trained model is
/// evaluated on windows; an input that still exceeds the model's maximum
/// sequence length is an error, never a silent skip.
pub struct TransformerPredictor<'a> {
    model: &'a ModelParams<f32>,
    mode: &'a dyn TrainingMode,
    config: &'a TrainConfig,
}

impl<'a> TransformerPredictor<'a> {
    pub fn new(
        model: &'a ModelParams<f32>,
        mode: &'a dyn TrainingMode,
        config: &'a TrainConfig,
    ) -> Self {
        TransformerPredictor {
            model,
            mode,
            config,
        }
    }
}

impl Predictor for TransformerPredictor<'_> {
    fn name(&self) -> String {
        format!("nlm-{}", self.mode.name())
    }

    fn rank(&self, tokens: &[u32], position: usize) -> Result<Vec<u32>> {
        check_position(tokens, position)?;
        let (input, pos) = self.mode.shape_eval_input(tokens, position, self.config)?;
        if input.len() > self.model.config.max_seq {
            return Err(Error::SequenceTooLong {
                len: input.len(),
                max: self.model.config.max_seq,
            });
        }
        let pad = vec![false; input.len()];
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hidden = encoder_forward(
            &tape,
            &self.model.config,
            &self.model.params,
            &input,
            &pad,
            false,
            &mut rng,
        )?;
        let logits = tape.value(mlm_logits(&tape, &self.model.params, hidden, &[pos])?);
        let row = logits.data();
        let candidates: Vec<u32> = (NUM_SPECIALS as u32..self.model.config.vocab as u32).collect();
        let scores: Vec<f64> = candidates.iter().map(|&id| row[id as usize] as f64).collect();
        Ok(rank_by_score(candidates, &scores))
    }
}
