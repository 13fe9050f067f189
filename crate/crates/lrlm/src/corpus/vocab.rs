//! Vocabulary over BPE pieces with reserved special tokens, plus the
//! equal-size frequency binning used by the per-bin accuracy report.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const MASK_ID: u32 = 2;
pub const PAD_ID: u32 = 3;
pub const UNK_ID: u32 = 4;
pub const CLS_ID: u32 = 5;

/// Special token surface forms, in reserved-id order.
pub const SPECIAL_TOKENS: [&str; 6] = ["[BOS]", "[EOS]", "[MASK]", "[PAD]", "[UNK]", "[CLS]"];

pub const NUM_SPECIALS: usize = SPECIAL_TOKENS.len();

/// Token/id bijection with raw corpus counts. Ids are dense from 0, the six
/// special tokens own ids 0..=5, and the remaining tokens are ordered by
/// descending count, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds the vocabulary from a BPE-segmented corpus. Special-token
    /// counts are always zero; an empty corpus yields specials only.
    pub fn build(corpus: &[Vec<String>]) -> Vocabulary {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in corpus {
            for piece in sentence {
                *counts.entry(piece.as_str()).or_insert(0) += 1;
            }
        }
        for special in SPECIAL_TOKENS {
            counts.remove(special);
        }
        let mut ordered: Vec<(&str, u64)> = counts.into_iter().collect();
        ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        let mut token_counts = vec![0u64; NUM_SPECIALS];
        for (token, count) in ordered {
            tokens.push(token.to_string());
            token_counts.push(count);
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            counts: token_counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Maps a token to its id, falling back to `[UNK]`.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < NUM_SPECIALS
    }

    /// Ids of all non-special tokens, ascending.
    pub fn non_special_ids(&self) -> impl Iterator<Item = u32> + '_ {
        NUM_SPECIALS as u32..self.tokens.len() as u32
    }

    pub fn encode(&self, pieces: &[String]) -> Vec<u32> {
        pieces.iter().map(|p| self.id_or_unk(p)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&id| self.token(id).to_string()).collect()
    }

    /// Writes the vocabulary file: one "token<TAB>count" per line, id = line
    /// number (0-based).
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (token, count) in self.tokens.iter().zip(&self.counts) {
            out.push_str(token);
            out.push('\t');
            out.push_str(&count.to_string());
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a vocabulary file written by [`Vocabulary::write`]. Lines
    /// starting with "# " are comments; tokens never contain spaces, so data
    /// lines cannot be mistaken for them.
    pub fn read(path: &Path) -> Result<Vocabulary> {
        let text = fs::read_to_string(path)?;
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with("# ") {
                continue;
            }
            let Some((token, count)) = line.split_once('\t') else {
                return Err(Error::VocabParse {
                    line: lineno + 1,
                    message: format!("expected \"token<TAB>count\", got {line:?}"),
                });
            };
            let count: u64 = count.parse().map_err(|_| Error::VocabParse {
                line: lineno + 1,
                message: format!("bad count {count:?}"),
            })?;
            tokens.push(token.to_string());
            counts.push(count);
        }
        if tokens.len() < NUM_SPECIALS
            || tokens[..NUM_SPECIALS] != SPECIAL_TOKENS.map(|s| s.to_string())
        {
            return Err(Error::VocabParse {
                line: 1,
                message: "file must start with the six special tokens".to_string(),
            });
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            tokens,
            counts,
            index,
        })
    }
}

/// Equal-size frequency bins over the non-special vocabulary. Bin 1 holds
/// the least frequent tokens; sizes differ by at most one, with remainders
/// going to the lowest-frequency bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyBins {
    k: usize,
    assignment: HashMap<u32, usize>,
}

/// Partitions the non-special vocabulary into `k` contiguous bins sorted
/// ascending by count (ties by token id).
pub fn frequency_bins(vocab: &Vocabulary, k: usize) -> Result<FrequencyBins> {
    let ids: Vec<u32> = vocab.non_special_ids().collect();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "frequency_bins: k must be at least 1".to_string(),
        ));
    }
    if ids.len() < k {
        return Err(Error::InvalidArgument(format!(
            "frequency_bins: cannot split {} non-special tokens into {} bins",
            ids.len(),
            k
        )));
    }
    let mut sorted = ids;
    sorted.sort_by_key(|&id| (vocab.count(id), id));

    let base = sorted.len() / k;
    let remainder = sorted.len() % k;
    let mut assignment = HashMap::new();
    let mut cursor = 0;
    for bin in 1..=k {
        let size = base + usize::from(bin <= remainder);
        for &id in &sorted[cursor..cursor + size] {
            assignment.insert(id, bin);
        }
        cursor += size;
    }
    Ok(FrequencyBins { k, assignment })
}

impl FrequencyBins {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Bin index in 1..=k for a non-special token id.
    pub fn bin(&self, id: u32) -> Option<usize> {
        self.assignment.get(&id).copied()
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &bin in self.assignment.values() {
            sizes[bin - 1] += 1;
        }
        sizes
    }
}
