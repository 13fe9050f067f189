use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::NUM_SPECIALS;
use crate::distill::SoftLabelSet;
use crate::numerics::{Adam, Tape};
use crate::pipeline::{build_eval_set, EvalItem, DEFAULT_EVAL_LIMIT};
use crate::train::{
    mlm_batch_loss, mode_by_name, EarlyStopper, StopDecision, TrainConfig, TrainingMode,
};
use crate::transformer::{encoder_forward, mlm_logits, ModelConfig, ModelParams};
use crate::{Error, Result};

/// Offsets mixed into the user seed so parameter init, batch sampling, and
/// dropout draw from independent streams.
const DATA_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
const DROPOUT_STREAM: u64 = 0x2545_F491_4F6C_DD1D;

/// One periodic-evaluation row: mean training loss since the previous
/// evaluation (NaN for the untrained baseline) and validation accuracy.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub step: usize,
    pub loss: f64,
    pub val_accuracy: f64,
}

/// Bitwise float equality so records with the NaN baseline loss still
/// compare equal across reruns.
impl PartialEq for EvalRecord {
    fn eq(&self, other: &Self) -> bool {
        self.step == other.step
            && self.loss.to_bits() == other.loss.to_bits()
            && self.val_accuracy.to_bits() == other.val_accuracy.to_bits()
    }
}

impl Eq for EvalRecord {}

/// Result of a pretraining run.
pub struct PretrainOutcome {
    /// Parameters at the best validation accuracy seen, untrained included.
    pub model: ModelParams<f32>,
    pub best_val_accuracy: f64,
    /// Optimizer steps actually taken before stopping.
    pub steps_run: usize,
    /// Per-step training losses.
    pub losses: Vec<f64>,
    /// Periodic validation records, starting with the step-0 baseline.
    pub evals: Vec<EvalRecord>,
}

/// Train and validation views of a sentence corpus.
pub type CorpusSplit<'a> = (&'a [Vec<u32>], &'a [Vec<u32>]);

/// Splits off the last 5% of sentences (at least one) for validation.
pub fn split_validation(corpus: &[Vec<u32>]) -> Result<CorpusSplit<'_>> {
    if corpus.len() < 2 {
        return Err(Error::EmptyCorpus(
            "pretraining needs at least two sentences to hold one out",
        ));
    }
    let n_val = (corpus.len() / 20).max(1);
    let cut = corpus.len() - n_val;
    Ok((&corpus[..cut], &corpus[cut..]))
}

/// Fraction of eval items whose masked position the model restores, taking
/// the argmax over non-special vocabulary ids. Items too long for the model
/// after mode shaping are skipped.
pub fn validation_accuracy(
    mode: &dyn TrainingMode,
    config: &TrainConfig,
    model: &ModelParams<f32>,
    items: &[EvalItem],
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut correct = 0usize;
    let mut scored = 0usize;
    for item in items {
        let (tokens, pos) = mode.shape_eval_input(&item.tokens, item.position, config)?;
        if tokens.len() > model.config.max_seq {
            continue;
        }
        let pad = vec![false; tokens.len()];
        let tape = Tape::new();
        let hidden = encoder_forward(
            &tape,
            &model.config,
            &model.params,
            &tokens,
            &pad,
            false,
            &mut rng,
        )?;
        let logits = tape.value(mlm_logits(&tape, &model.params, hidden, &[pos])?);
        let row = logits.data();
        let mut best = NUM_SPECIALS;
        for id in NUM_SPECIALS + 1..model.config.vocab {
            if row[id] > row[best] {
                best = id;
            }
        }
        if best as u32 == item.gold {
            correct += 1;
        }
        scored += 1;
    }
    if scored == 0 {
        return Ok(0.0);
    }
    Ok(correct as f64 / scored as f64)
}

/// Pretrains a masked language model under the named training mode.
///
/// The corpus is split 95/5 into train/validation; the model is evaluated
/// untrained to seed early stopping, then trained with periodic validation
/// until accuracy stops improving for `patience` evaluations or `max_steps`
/// is reached. The returned model is the best validation snapshot.
pub fn pretrain(
    model_config: &ModelConfig,
    config: &TrainConfig,
    corpus: &[Vec<u32>],
    labels: Option<&SoftLabelSet>,
) -> Result<PretrainOutcome> {
    config.validate()?;
    let mode = mode_by_name(&config.mode)?;
    if mode.wants_labels() && labels.is_none() {
        return Err(Error::InvalidArgument(format!(
            "{} mode requires a soft label set",
            mode.name()
        )));
    }
    if !mode.wants_labels() && labels.is_some() {
        return Err(Error::InvalidArgument(format!(
            "{} mode does not take soft labels",
            mode.name()
        )));
    }

    let mut model_config = model_config.clone();
    model_config.half_width = mode.band_half_width(config)?;
    model_config.validate()?;

    let (train, val) = split_validation(corpus)?;
    let data = mode.prepare(train, &model_config, config)?;
    if data.is_empty() {
        return Err(Error::EmptyCorpus("no training examples after the split"));
    }
    let val_items = build_eval_set(val, DEFAULT_EVAL_LIMIT);
    if val_items.is_empty() {
        return Err(Error::EmptyEvalSet);
    }

    let mut params = ModelParams::<f32>::init(&model_config, config.seed)?;
    let mut adam = Adam::new(config.lr);
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DATA_STREAM));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DROPOUT_STREAM));

    let mut stopper = EarlyStopper::new(config.patience);
    let baseline = validation_accuracy(mode, config, &params, &val_items)?;
    stopper.check(baseline);
    let mut best = params.clone();
    let mut best_acc = baseline;
    let mut evals = vec![EvalRecord {
        step: 0,
        loss: f64::NAN,
        val_accuracy: baseline,
    }];

    let mut losses = Vec::new();
    let mut steps_run = 0;
    let mut window_sum = 0.0;
    let mut window_n = 0usize;
    for step in 1..=config.max_steps {
        let batch = mode.next_batch(&data, config, model_config.vocab, labels, &mut data_rng)?;
        let tape = Tape::new();
        let loss = mlm_batch_loss(
            &tape,
            &model_config,
            &params.params,
            &batch,
            config.lambda,
            true,
            &mut dropout_rng,
        )?;
        let loss_value = match loss {
            Some(var) => {
                params.params.zero_grads();
                tape.backward(var, &mut params.params)?;
                adam.step(&mut params.params)?;
                tape.scalar_value(var) as f64
            }
            None => 0.0,
        };
        losses.push(loss_value);
        window_sum += loss_value;
        window_n += 1;
        steps_run = step;

        if step % config.eval_every == 0 {
            let acc = validation_accuracy(mode, config, &params, &val_items)?;
            evals.push(EvalRecord {
                step,
                loss: window_sum / window_n as f64,
                val_accuracy: acc,
            });
            window_sum = 0.0;
            window_n = 0;
            let decision = stopper.check(acc);
            if stopper.improved() {
                best = params.clone();
                best_acc = acc;
            }
            if decision == StopDecision::Stop {
                break;
            }
        }
    }

    Ok(PretrainOutcome {
        model: best,
        best_val_accuracy: best_acc,
        steps_run,
        losses,
        evals,
    })
}

/// Writes the periodic-evaluation log as TSV with a header row.
pub fn write_log_tsv<W: Write>(evals: &[EvalRecord], writer: &mut W) -> Result<()> {
    writeln!(writer, "step\tloss\tval_accuracy")?;
    for row in evals {
        writeln!(writer, "{}\t{}\t{}", row.step, row.loss, row.val_accuracy)?;
    }
    Ok(())
}
