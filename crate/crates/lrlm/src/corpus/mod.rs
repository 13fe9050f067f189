//! Corpus ingestion: tokenization, case normalization, BPE segmentation,
//! vocabulary construction, and frequency binning.
//!
//! The preprocessing chain is `tokenize` -> `normalize_case` -> `learn_bpe` /
//! `apply_bpe` -> `Vocabulary::build`, with every step a pure function of its
//! inputs so that identical corpora produce byte-identical artifacts.

mod bpe;
mod vocab;

pub use bpe::{learn_bpe, BpeModel, DEFAULT_MARKER};
pub use vocab::{
    frequency_bins, FrequencyBins, Vocabulary, BOS_ID, CLS_ID, EOS_ID, MASK_ID, NUM_SPECIALS,
    PAD_ID, SPECIAL_TOKENS, UNK_ID,
};

use std::fs;
use std::path::Path;

use crate::Result;

/// Splits raw text into tokens: whitespace separation plus detachment of
/// leading and trailing ASCII punctuation characters as their own tokens.
///
/// Interior punctuation (hyphens, apostrophes) stays attached. Never emits
/// empty tokens; empty input yields an empty sequence.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && chars[start].is_ascii_punctuation() {
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            end -= 1;
        }
        for &c in &chars[..start] {
            out.push(c.to_string());
        }
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            out.push(c.to_string());
        }
    }
    out
}

/// Rewrites every occurrence of each case-insensitive word type to that
/// type's most frequent surface casing; ties pick the lexicographically
/// smallest surface form.
pub fn normalize_case(corpus: &[Vec<String>]) -> Vec<Vec<String>> {
    use std::collections::HashMap;

    let mut surface_counts: HashMap<String, HashMap<&str, u64>> = HashMap::new();
    for sentence in corpus {
        for token in sentence {
            *surface_counts
                .entry(token.to_lowercase())
                .or_default()
                .entry(token.as_str())
                .or_insert(0) += 1;
        }
    }

    let mut chosen: HashMap<String, String> = HashMap::new();
    for (key, surfaces) in surface_counts {
        let mut forms: Vec<(&str, u64)> = surfaces.into_iter().collect();
        forms.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        chosen.insert(key, forms[0].0.to_string());
    }

    corpus
        .iter()
        .map(|sentence| {
            sentence
                .iter()
                .map(|token| chosen[&token.to_lowercase()].clone())
                .collect()
        })
        .collect()
}

/// Reads a corpus file: one sentence per line, UTF-8.
pub fn read_sentences(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

/// Writes a corpus file: one sentence per line (tokens joined by spaces).
pub fn write_sentences(path: &Path, sentences: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    for sentence in sentences {
        out.push_str(&sentence.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
