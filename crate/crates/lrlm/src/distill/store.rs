use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::distill::{build_soft_label, SoftLabel};
use crate::ngram::NgramModel;
use crate::pipeline::MaskPlan;
use crate::{Error, Result};

/// Where a label set came from: the teacher model and the distillation
/// knobs. Written as the first line of the JSONL store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreProvenance {
    pub slm: String,
    pub hardness: u32,
    pub top_k: usize,
}

/// One stored label, keyed by the sentence and position it targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelRecord {
    pub sentence: usize,
    pub position: usize,
    #[serde(flatten)]
    pub label: SoftLabel,
}

/// All soft labels for one corpus, with unique (sentence, position) keys
/// and an index for training-time lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelSet {
    pub provenance: StoreProvenance,
    records: Vec<SoftLabelRecord>,
    index: HashMap<(usize, usize), usize>,
}

impl SoftLabelSet {
    pub fn new(provenance: StoreProvenance) -> SoftLabelSet {
        SoftLabelSet {
            provenance,
            records: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, sentence: usize, position: usize, label: SoftLabel) -> Result<()> {
        if self.index.contains_key(&(sentence, position)) {
            return Err(Error::InvalidArgument(format!(
                "duplicate soft label for sentence {sentence}, position {position}"
            )));
        }
        self.index.insert((sentence, position), self.records.len());
        self.records.push(SoftLabelRecord {
            sentence,
            position,
            label,
        });
        Ok(())
    }

    pub fn get(&self, sentence: usize, position: usize) -> Option<&SoftLabel> {
        self.index
            .get(&(sentence, position))
            .map(|&i| &self.records[i].label)
    }

    /// Lookup that turns an absent key into the training-time error.
    pub fn require(&self, sentence: usize, position: usize) -> Result<&SoftLabel> {
        self.get(sentence, position)
            .ok_or(Error::MissingSoftLabel { sentence, position })
    }

    pub fn records(&self) -> &[SoftLabelRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, writer: &mut W) -> Result<()> {
        serde_json::to_writer(&mut *writer, &self.provenance)?;
        writeln!(writer)?;
        for record in &self.records {
            serde_json::to_writer(&mut *writer, record)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Reads a store written by [`SoftLabelSet::write_jsonl`]. Blank lines
    /// and lines starting with '#' are skipped.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<SoftLabelSet> {
        let mut lines = reader.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if !trimmed.is_empty() && !trimmed.starts_with('#') {
                        break line;
                    }
                }
                None => {
                    return Err(Error::InvalidArgument(
                        "soft label store is missing its provenance header".into(),
                    ))
                }
            }
        };
        let provenance: StoreProvenance = serde_json::from_str(&header)?;
        let mut set = SoftLabelSet::new(provenance);
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record: SoftLabelRecord = serde_json::from_str(&line)?;
            record.label.validate()?;
            set.insert(record.sentence, record.position, record.label)?;
        }
        Ok(set)
    }
}

/// Distills one soft label per mask-plan entry, each computed on the
/// original unmasked sentence so simultaneous masks never see each other.
pub fn build_label_set(
    model: &NgramModel,
    corpus: &[Vec<u32>],
    plan: &MaskPlan,
    vocab: &Vocabulary,
    hardness: u32,
    top_k: usize,
) -> Result<SoftLabelSet> {
    let provenance = StoreProvenance {
        slm: format!("{}-gram-kneser-ney", model.order()),
        hardness,
        top_k,
    };
    let mut set = SoftLabelSet::new(provenance);
    for entry in &plan.entries {
        let sentence = corpus.get(entry.sentence).ok_or(Error::PositionOutOfRange {
            sentence: entry.sentence,
            position: entry.position,
            len: 0,
        })?;
        if entry.position >= sentence.len() {
            return Err(Error::PositionOutOfRange {
                sentence: entry.sentence,
                position: entry.position,
                len: sentence.len(),
            });
        }
        let label = build_soft_label(model, sentence, entry.position, vocab, hardness, top_k)?;
        set.insert(entry.sentence, entry.position, label)?;
    }
    Ok(set)
}
