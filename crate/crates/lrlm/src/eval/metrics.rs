use std::collections::HashSet;

use crate::corpus::{FrequencyBins, Vocabulary};
use crate::eval::Predictor;
use crate::pipeline::EvalItem;
use crate::train::{PairExample, TagExample};
use crate::{Error, Result};

/// Top-1 prediction for every item, in item order.
pub fn predictions(predictor: &dyn Predictor, items: &[EvalItem]) -> Result<Vec<u32>> {
    items
        .iter()
        .map(|item| predictor.predict(&item.tokens, item.position))
        .collect()
}

pub(super) fn count_correct(preds: &[u32], items: &[EvalItem]) -> usize {
    preds
        .iter()
        .zip(items)
        .filter(|(&p, item)| p == item.gold)
        .count()
}

/// Fraction of items whose top-ranked candidate is the gold token.
pub fn mlm_accuracy(predictor: &dyn Predictor, items: &[EvalItem]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let preds = predictions(predictor, items)?;
    Ok(count_correct(&preds, items) as f64 / items.len() as f64)
}

/// Accuracy within one frequency bin. Bin 1 holds the least frequent
/// tokens; a bin no eval item fell into has no accuracy, rather than zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinAccuracy {
    pub bin: usize,
    pub items: usize,
    pub correct: usize,
}

impl BinAccuracy {
    pub fn accuracy(&self) -> Option<f64> {
        (self.items > 0).then(|| self.correct as f64 / self.items as f64)
    }
}

pub(super) fn bins_from(
    preds: &[u32],
    items: &[EvalItem],
    bins: &FrequencyBins,
) -> Result<Vec<BinAccuracy>> {
    let mut cells: Vec<BinAccuracy> = (1..=bins.k())
        .map(|bin| BinAccuracy {
            bin,
            items: 0,
            correct: 0,
        })
        .collect();
    for (&pred, item) in preds.iter().zip(items) {
        let bin = bins.bin(item.gold).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "gold token {} is outside the binned vocabulary",
                item.gold
            ))
        })?;
        cells[bin - 1].items += 1;
        if pred == item.gold {
            cells[bin - 1].correct += 1;
        }
    }
    Ok(cells)
}

/// Accuracy stratified by the gold token's training-frequency bin.
pub fn bin_accuracy(
    predictor: &dyn Predictor,
    items: &[EvalItem],
    bins: &FrequencyBins,
) -> Result<Vec<BinAccuracy>> {
    let preds = predictions(predictor, items)?;
    bins_from(&preds, items, bins)
}

/// What word completion needs beyond the predictor: piece strings, the BPE
/// continuation marker, and the pre-BPE word list that defines success.
pub struct CompletionContext<'a> {
    pub vocab: &'a Vocabulary,
    pub marker: &'a str,
    pub words: &'a HashSet<String>,
}

impl CompletionContext<'_> {
    fn continues(&self, id: u32) -> bool {
        self.vocab.token(id).ends_with(self.marker)
    }

    fn stem<'p>(&self, piece: &'p str) -> &'p str {
        piece.strip_suffix(self.marker).unwrap_or(piece)
    }
}

/// An item asks for word completion when the gold piece ends a multi-piece
/// word: the preceding piece carries the continuation marker and the gold
/// piece does not. Depends only on the gold piece sequence.
pub(super) fn completion_eligible(item: &EvalItem, ctx: &CompletionContext) -> bool {
    item.position > 0
        && ctx.continues(item.tokens[item.position - 1])
        && !ctx.continues(item.gold)
}

/// The predicted piece completes the word when it carries no continuation
/// marker and the word's earlier pieces plus the prediction, markers
/// stripped, spell a known word. The prediction need not equal the gold.
pub(super) fn completion_success(item: &EvalItem, pred: u32, ctx: &CompletionContext) -> bool {
    if ctx.continues(pred) {
        return false;
    }
    let mut start = item.position;
    while start > 0 && ctx.continues(item.tokens[start - 1]) {
        start -= 1;
    }
    let mut word = String::new();
    for &id in &item.tokens[start..item.position] {
        word.push_str(ctx.stem(ctx.vocab.token(id)));
    }
    word.push_str(ctx.stem(ctx.vocab.token(pred)));
    ctx.words.contains(&word)
}

pub(super) fn completion_from(
    preds: &[u32],
    items: &[EvalItem],
    ctx: &CompletionContext,
) -> (usize, usize) {
    let mut eligible = 0;
    let mut completed = 0;
    for (&pred, item) in preds.iter().zip(items) {
        if completion_eligible(item, ctx) {
            eligible += 1;
            if completion_success(item, pred, ctx) {
                completed += 1;
            }
        }
    }
    (eligible, completed)
}

/// How often a masked word-final piece is completed to a known word.
/// Only eligible items are sent to the predictor.
pub fn word_completion(
    predictor: &dyn Predictor,
    items: &[EvalItem],
    ctx: &CompletionContext,
) -> Result<f64> {
    let eligible: Vec<&EvalItem> = items
        .iter()
        .filter(|item| completion_eligible(item, ctx))
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleItems);
    }
    let mut completed = 0;
    for item in &eligible {
        let pred = predictor.predict(&item.tokens, item.position)?;
        if completion_success(item, pred, ctx) {
            completed += 1;
        }
    }
    Ok(completed as f64 / eligible.len() as f64)
}

/// Accuracy of a sentence-pair classifier over a labeled dataset.
pub fn pair_accuracy<F>(examples: &[PairExample], mut classify: F) -> Result<f64>
where
    F: FnMut(&PairExample) -> Result<usize>,
{
    if examples.is_empty() {
        return Err(Error::EmptyDataset("pair classification"));
    }
    let mut correct = 0;
    for example in examples {
        if classify(example)? == example.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Accuracy of a tagger, scored per word across all sentences — not
/// averaged per sentence.
pub fn tag_accuracy<F>(examples: &[TagExample], mut tag: F) -> Result<f64>
where
    F: FnMut(&TagExample) -> Result<Vec<usize>>,
{
    if examples.is_empty() {
        return Err(Error::EmptyDataset("sequence tagging"));
    }
    let mut correct = 0usize;
    let mut words = 0usize;
    for example in examples {
        let pred = tag(example)?;
        if pred.len() != example.tags.len() {
            return Err(Error::ShapeMismatch {
                op: "tag_accuracy",
                details: format!(
                    "tagger returned {} tags for {} words",
                    pred.len(),
                    example.tags.len()
                ),
            });
        }
        words += example.tags.len();
        correct += pred
            .iter()
            .zip(&example.tags)
            .filter(|(p, t)| p == t)
            .count();
    }
    if words == 0 {
        return Err(Error::EmptyDataset("sequence tagging"));
    }
    Ok(correct as f64 / words as f64)
}
