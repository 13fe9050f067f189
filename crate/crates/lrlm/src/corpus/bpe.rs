//! Byte pair encoding: learning merges from word-type frequencies and
//! applying them greedily in learned order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Continuation marker appended to every non-final piece of a word.
pub const DEFAULT_MARKER: &str = "@@";

/// An ordered list of learned symbol-pair merges plus the continuation
/// marker convention they were learned under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    marker: String,
}

/// Learns `n_merges` merges from the corpus by repeatedly merging the most
/// frequent adjacent symbol pair, counting over word types weighted by
/// frequency. Ties pick the lexicographically smallest pair. Returns fewer
/// merges when the corpus runs out of distinct adjacent pairs.
pub fn learn_bpe(corpus: &[Vec<String>], n_merges: usize) -> BpeModel {
    let mut word_freqs: HashMap<&str, u64> = HashMap::new();
    for sentence in corpus {
        for word in sentence {
            *word_freqs.entry(word.as_str()).or_insert(0) += 1;
        }
    }

    // Word types as symbol sequences, in a deterministic order.
    let mut types: Vec<(Vec<String>, u64)> = {
        let mut sorted: Vec<(&str, u64)> = word_freqs.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        sorted
            .into_iter()
            .map(|(w, f)| (split_to_symbols(w, DEFAULT_MARKER), f))
            .collect()
    };

    let mut merges = Vec::new();
    for _ in 0..n_merges {
        let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (symbols, freq) in &types {
            for pair in symbols.windows(2) {
                *pair_counts
                    .entry((pair[0].as_str(), pair[1].as_str()))
                    .or_insert(0) += freq;
            }
        }
        let best = pair_counts.into_iter().max_by(|a, b| {
            a.1.cmp(&b.1)
                .then_with(|| b.0 .0.cmp(a.0 .0))
                .then_with(|| b.0 .1.cmp(a.0 .1))
        });
        let Some(((left, right), _)) = best else {
            break;
        };
        let merge = (left.to_string(), right.to_string());
        for (symbols, _) in &mut types {
            merge_in_place(symbols, &merge, DEFAULT_MARKER);
        }
        merges.push(merge);
    }

    BpeModel {
        merges,
        marker: DEFAULT_MARKER.to_string(),
    }
}

/// Decomposes a word into single-character symbols, non-final ones carrying
/// the continuation marker.
fn split_to_symbols(word: &str, marker: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let last = chars.len().saturating_sub(1);
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == last {
                c.to_string()
            } else {
                format!("{c}{marker}")
            }
        })
        .collect()
}

/// Applies one merge to a symbol sequence, left to right, without re-merging
/// the freshly created symbol in the same pass.
fn merge_in_place(symbols: &mut Vec<String>, merge: &(String, String), marker: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == merge.0 && symbols[i + 1] == merge.1 {
            let left_core = symbols[i]
                .strip_suffix(marker)
                .unwrap_or(&symbols[i])
                .to_string();
            let joined = format!("{}{}", left_core, symbols[i + 1]);
            symbols[i] = joined;
            symbols.remove(i + 1);
        }
        i += 1;
    }
}

impl BpeModel {
    pub fn new(merges: Vec<(String, String)>, marker: impl Into<String>) -> Self {
        Self {
            merges,
            marker: marker.into(),
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    /// Segments one word: characters with continuation markers, then merges
    /// applied greedily in learned order until none apply. Stripping markers
    /// from the concatenated pieces reproduces the word exactly.
    pub fn apply_word(&self, word: &str) -> Vec<String> {
        let mut symbols = split_to_symbols(word, &self.marker);
        if symbols.len() < 2 {
            return symbols;
        }
        let ranks: HashMap<(&str, &str), usize> = self
            .merges
            .iter()
            .enumerate()
            .map(|(i, (a, b))| ((a.as_str(), b.as_str()), i))
            .collect();
        loop {
            let mut best: Option<(usize, usize)> = None; // (rank, position)
            for (pos, pair) in symbols.windows(2).enumerate() {
                if let Some(&rank) = ranks.get(&(pair[0].as_str(), pair[1].as_str())) {
                    if best.is_none_or(|(r, _)| rank < r) {
                        best = Some((rank, pos));
                    }
                }
            }
            let Some((rank, _)) = best else { break };
            let merge = self.merges[rank].clone();
            merge_in_place(&mut symbols, &merge, &self.marker);
            if symbols.len() < 2 {
                break;
            }
        }
        symbols
    }

    /// Segments every token of a sentence, flattening the pieces.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        tokens.iter().flat_map(|w| self.apply_word(w)).collect()
    }

    /// Writes the merges file: one merge per line, "left right", learned order.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a merges file written by [`BpeModel::write`]. Lines starting
    /// with "# " are comments; a bare "#" is never the left side of a merge
    /// (leading punctuation is detached before segmentation), so data lines
    /// cannot be mistaken for them.
    pub fn read(path: &Path, marker: impl Into<String>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut merges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => merges.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "merges file line {}: expected \"left right\", got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(Self::new(merges, marker))
    }

    /// Strips the continuation marker off a piece, if present.
    pub fn strip_marker<'a>(&self, piece: &'a str) -> &'a str {
        piece.strip_suffix(self.marker.as_str()).unwrap_or(piece)
    }

    /// True when the piece carries the continuation marker.
    pub fn is_continuation(&self, piece: &str) -> bool {
        piece.ends_with(self.marker.as_str())
    }
}
