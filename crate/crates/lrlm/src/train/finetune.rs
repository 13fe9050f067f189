use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CLS_ID;
use crate::corpus::EOS_ID;
use crate::numerics::{Adam, Tape, Tensor, Var};
use crate::train::FINETUNE_LR;
use crate::transformer::{encoder_forward, pool, ModelParams, PoolMode};
use crate::{Error, Result};

/// Pair-classification labels, in label-id order.
pub const PAIR_LABELS: [&str; 3] = ["contradiction", "entailment", "neutral"];

/// Seed offsets matching the pretraining streams.
const DATA_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
const DROPOUT_STREAM: u64 = 0x2545_F491_4F6C_DD1D;

/// One premise/hypothesis pair, already tokenized to vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub premise: Vec<u32>,
    pub hypothesis: Vec<u32>,
    /// Index into [`PAIR_LABELS`].
    pub label: usize,
}

/// One tagged sentence: subword pieces plus, for each word, the index of
/// its first piece and its tag id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagExample {
    pub pieces: Vec<u32>,
    pub word_first_piece: Vec<usize>,
    pub tags: Vec<usize>,
}

/// Steps, batching and learning rate for a fine-tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl FinetuneConfig {
    pub fn desk(seed: u64) -> FinetuneConfig {
        FinetuneConfig {
            steps: 300,
            batch_size: 16,
            lr: FINETUNE_LR,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "steps and batch_size must be positive".to_string(),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Reads `premise<TAB>hypothesis<TAB>label` lines; text fields go through
/// `encode`, labels must be in [`PAIR_LABELS`]. Blank lines are skipped.
pub fn read_pairs_tsv<R: BufRead>(
    reader: R,
    mut encode: impl FnMut(&str) -> Result<Vec<u32>>,
) -> Result<Vec<PairExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "pair line {}: expected premise, hypothesis and label, got {} fields",
                i + 1,
                fields.len()
            )));
        }
        let label = PAIR_LABELS
            .iter()
            .position(|&l| l == fields[2])
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "pair line {}: unknown label {:?}; expected one of {}",
                    i + 1,
                    fields[2],
                    PAIR_LABELS.join(", ")
                ))
            })?;
        out.push(PairExample {
            premise: encode(fields[0])?,
            hypothesis: encode(fields[1])?,
            label,
        });
    }
    Ok(out)
}

/// Reads CoNLL-style `token<TAB>tag` lines with blank lines between
/// sentences. Tag ids are assigned in order of first appearance; the tag
/// names are returned alongside the examples.
pub fn read_conll<R: BufRead>(
    reader: R,
    mut encode: impl FnMut(&str) -> Result<Vec<u32>>,
) -> Result<(Vec<TagExample>, Vec<String>)> {
    let mut tag_names: Vec<String> = Vec::new();
    let mut examples = Vec::new();
    let mut current = TagExample {
        pieces: Vec::new(),
        word_first_piece: Vec::new(),
        tags: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !current.tags.is_empty() {
                examples.push(std::mem::replace(
                    &mut current,
                    TagExample {
                        pieces: Vec::new(),
                        word_first_piece: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "tag line {}: expected token and tag, got {} fields",
                i + 1,
                fields.len()
            )));
        }
        let pieces = encode(fields[0])?;
        if pieces.is_empty() {
            return Err(Error::AlignmentMismatch(format!(
                "tag line {}: word {:?} encodes to no pieces",
                i + 1,
                fields[0]
            )));
        }
        let tag = match tag_names.iter().position(|t| t == fields[1]) {
            Some(t) => t,
            None => {
                tag_names.push(fields[1].to_string());
                tag_names.len() - 1
            }
        };
        current.word_first_piece.push(current.pieces.len());
        current.pieces.extend(pieces);
        current.tags.push(tag);
    }
    if !current.tags.is_empty() {
        examples.push(current);
    }
    Ok((examples, tag_names))
}

/// Encoder input for a pair: `[CLS] premise [EOS] hypothesis [EOS]`,
/// truncated to `max_seq`.
pub fn pair_tokens(example: &PairExample, max_seq: usize) -> Vec<u32> {
    let mut tokens = Vec::with_capacity(example.premise.len() + example.hypothesis.len() + 3);
    tokens.push(CLS_ID);
    tokens.extend_from_slice(&example.premise);
    tokens.push(EOS_ID);
    tokens.extend_from_slice(&example.hypothesis);
    tokens.push(EOS_ID);
    tokens.truncate(max_seq);
    tokens
}

/// Adds a zero-initialized linear head if absent, or checks its shape.
/// Zero init keeps early predictions driven by the gradient signal rather
/// than initialization noise, which matters at the small fine-tuning rate.
fn ensure_head(model: &mut ModelParams<f32>, name: &str, classes: usize) -> Result<()> {
    let w_name = format!("{name}.w");
    let b_name = format!("{name}.b");
    let shape = vec![model.config.dim, classes];
    match model.params.get(&w_name) {
        Some(p) if p.value.shape() == shape.as_slice() => Ok(()),
        Some(p) => Err(Error::InvalidArgument(format!(
            "existing head {w_name} has shape {:?}, expected {shape:?}",
            p.value.shape()
        ))),
        None => {
            model.params.add(&w_name, Tensor::zeros(&shape))?;
            model.params.add(&b_name, Tensor::zeros(&[classes]))?;
            Ok(())
        }
    }
}

fn head_logits(
    tape: &Tape<f32>,
    model: &ModelParams<f32>,
    features: Var,
    name: &str,
) -> Result<Var> {
    let w = tape.param(&model.params, &format!("{name}.w"))?;
    let b = tape.param(&model.params, &format!("{name}.b"))?;
    let logits = tape.matmul(features, w)?;
    tape.add_rows(logits, b)
}

fn one_hot_rows(labels: &[usize], classes: usize) -> Result<Tensor<f32>> {
    let mut data = vec![0.0f32; labels.len() * classes];
    for (r, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label id {label} outside the {classes}-class head"
            )));
        }
        data[r * classes + label] = 1.0;
    }
    Tensor::from_vec(&[labels.len(), classes], data)
}

/// Fine-tunes all parameters plus a fresh `head.nli` linear layer on
/// premise/hypothesis pairs. `pooling` should match the pretraining mode.
pub fn finetune_pairs(
    model: &ModelParams<f32>,
    pooling: PoolMode,
    config: &FinetuneConfig,
    examples: &[PairExample],
) -> Result<ModelParams<f32>> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyDataset("pair classification"));
    }
    let mut tuned = model.clone();
    ensure_head(&mut tuned, "head.nli", PAIR_LABELS.len())?;
    let mut adam = Adam::new(config.lr);
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DATA_STREAM));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DROPOUT_STREAM));

    for _ in 0..config.steps {
        let tape = Tape::new();
        let mut total: Option<Var> = None;
        for _ in 0..config.batch_size {
            let example = &examples[data_rng.gen_range(0..examples.len())];
            let tokens = pair_tokens(example, tuned.config.max_seq);
            let pad = vec![false; tokens.len()];
            let hidden = encoder_forward(
                &tape,
                &tuned.config,
                &tuned.params,
                &tokens,
                &pad,
                true,
                &mut dropout_rng,
            )?;
            let pooled = pool(&tape, hidden, pooling, &pad)?;
            let logits = head_logits(&tape, &tuned, pooled, "head.nli")?;
            let target = tape.leaf(one_hot_rows(&[example.label], PAIR_LABELS.len())?);
            let loss = tape.cross_entropy(logits, target)?;
            let scaled = tape.scale(loss, 1.0 / config.batch_size as f64);
            total = Some(match total {
                Some(acc) => tape.add(acc, scaled)?,
                None => scaled,
            });
        }
        let loss = total.expect("batch_size is positive");
        tuned.params.zero_grads();
        tape.backward(loss, &mut tuned.params)?;
        adam.step(&mut tuned.params)?;
    }
    Ok(tuned)
}

/// Class probabilities for a pair: softmax over the tuned head's logits.
pub fn pair_probabilities(
    model: &ModelParams<f32>,
    pooling: PoolMode,
    example: &PairExample,
) -> Result<Vec<f64>> {
    let tokens = pair_tokens(example, model.config.max_seq);
    let pad = vec![false; tokens.len()];
    let tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let hidden = encoder_forward(
        &tape,
        &model.config,
        &model.params,
        &tokens,
        &pad,
        false,
        &mut rng,
    )?;
    let pooled = pool(&tape, hidden, pooling, &pad)?;
    let logits = tape.value(head_logits(&tape, model, pooled, "head.nli")?);
    let row: Vec<f64> = logits.data().iter().map(|&v| v as f64).collect();
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Predicted label index for a pair, ties to the lowest index.
pub fn classify_pair(
    model: &ModelParams<f32>,
    pooling: PoolMode,
    example: &PairExample,
) -> Result<usize> {
    let probs = pair_probabilities(model, pooling, example)?;
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    Ok(best)
}

fn argmax_row(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn check_tag_example(example: &TagExample, max_seq: usize, n_tags: usize) -> Result<()> {
    if example.pieces.len() > max_seq {
        return Err(Error::SequenceTooLong {
            len: example.pieces.len(),
            max: max_seq,
        });
    }
    if example.word_first_piece.len() != example.tags.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{} first-piece offsets for {} tags",
            example.word_first_piece.len(),
            example.tags.len()
        )));
    }
    let mut prev: Option<usize> = None;
    for &first in &example.word_first_piece {
        if first >= example.pieces.len() || prev.is_some_and(|p| first <= p) {
            return Err(Error::AlignmentMismatch(format!(
                "first-piece offset {first} is out of order for {} pieces",
                example.pieces.len()
            )));
        }
        prev = Some(first);
    }
    for &tag in &example.tags {
        if tag >= n_tags {
            return Err(Error::InvalidArgument(format!(
                "tag id {tag} outside the {n_tags}-tag head"
            )));
        }
    }
    Ok(())
}

/// Fine-tunes all parameters plus a fresh `head.tag` linear layer that
/// classifies each word from its first piece's hidden state.
pub fn finetune_tags(
    model: &ModelParams<f32>,
    config: &FinetuneConfig,
    examples: &[TagExample],
    n_tags: usize,
) -> Result<ModelParams<f32>> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyDataset("sequence tagging"));
    }
    if n_tags == 0 {
        return Err(Error::InvalidArgument(
            "tagging needs at least one tag".to_string(),
        ));
    }
    let mut tuned = model.clone();
    for example in examples {
        check_tag_example(example, tuned.config.max_seq, n_tags)?;
    }
    ensure_head(&mut tuned, "head.tag", n_tags)?;
    let mut adam = Adam::new(config.lr);
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DATA_STREAM));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(DROPOUT_STREAM));

    for _ in 0..config.steps {
        let tape = Tape::new();
        let mut total: Option<Var> = None;
        for _ in 0..config.batch_size {
            let example = &examples[data_rng.gen_range(0..examples.len())];
            let pad = vec![false; example.pieces.len()];
            let hidden = encoder_forward(
                &tape,
                &tuned.config,
                &tuned.params,
                &example.pieces,
                &pad,
                true,
                &mut dropout_rng,
            )?;
            let firsts = tape.gather_rows(hidden, &example.word_first_piece)?;
            let logits = head_logits(&tape, &tuned, firsts, "head.tag")?;
            let target = tape.leaf(one_hot_rows(&example.tags, n_tags)?);
            let loss = tape.cross_entropy(logits, target)?;
            let scaled = tape.scale(loss, 1.0 / config.batch_size as f64);
            total = Some(match total {
                Some(acc) => tape.add(acc, scaled)?,
                None => scaled,
            });
        }
        let loss = total.expect("batch_size is positive");
        tuned.params.zero_grads();
        tape.backward(loss, &mut tuned.params)?;
        adam.step(&mut tuned.params)?;
    }
    Ok(tuned)
}

/// Predicted tag ids for a tagged sentence's words.
pub fn tag_words(model: &ModelParams<f32>, example: &TagExample) -> Result<Vec<usize>> {
    let head = model
        .params
        .get("head.tag.w")
        .ok_or_else(|| Error::InvalidArgument("model has no tag head".to_string()))?;
    let n_tags = head.value.cols();
    check_tag_example(example, model.config.max_seq, n_tags)?;
    let pad = vec![false; example.pieces.len()];
    let tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let hidden = encoder_forward(
        &tape,
        &model.config,
        &model.params,
        &example.pieces,
        &pad,
        false,
        &mut rng,
    )?;
    let firsts = tape.gather_rows(hidden, &example.word_first_piece)?;
    let logits = tape.value(head_logits(&tape, model, firsts, "head.tag")?);
    Ok((0..example.tags.len())
        .map(|r| argmax_row(logits.row(r)))
        .collect())
}
