use std::fmt::Write as _;

use crate::corpus::FrequencyBins;
use crate::eval::metrics::{bins_from, completion_from, count_correct, predictions};
use crate::eval::{BinAccuracy, CompletionContext, Predictor};
use crate::pipeline::EvalItem;
use crate::{Error, Result};

/// Every pretraining measurement for one predictor in one place: overall
/// masked-LM accuracy, the per-frequency-bin breakdown, and the
/// word-completion rate, stamped with the predictor identifier and the
/// digest of the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub predictor: String,
    pub config_digest: String,
    pub items: usize,
    pub correct: usize,
    pub bins: Vec<BinAccuracy>,
    pub completion_eligible: usize,
    pub completion_completed: usize,
    pub has_completion: bool,
}

impl EvalReport {
    /// Runs the predictor once over the eval set and derives all metrics
    /// from that single pass. Word completion is measured only when a
    /// completion context is supplied.
    pub fn build(
        predictor: &dyn Predictor,
        items: &[EvalItem],
        bins: &FrequencyBins,
        completion: Option<&CompletionContext>,
        config_digest: &str,
    ) -> Result<EvalReport> {
        if items.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        let preds = predictions(predictor, items)?;
        let cells = bins_from(&preds, items, bins)?;
        let (eligible, completed) = match completion {
            Some(ctx) => completion_from(&preds, items, ctx),
            None => (0, 0),
        };
        Ok(EvalReport {
            predictor: predictor.name(),
            config_digest: config_digest.to_string(),
            items: items.len(),
            correct: count_correct(&preds, items),
            bins: cells,
            completion_eligible: eligible,
            completion_completed: completed,
            has_completion: completion.is_some(),
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.items as f64
    }

    /// None when no completion context was supplied or no item was eligible.
    pub fn completion_rate(&self) -> Option<f64> {
        (self.has_completion && self.completion_eligible > 0)
            .then(|| self.completion_completed as f64 / self.completion_eligible as f64)
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "predictor:       {}", self.predictor);
        let _ = writeln!(out, "config:          {}", self.config_digest);
        let _ = writeln!(out, "items:           {}", self.items);
        let _ = writeln!(out, "mlm accuracy:    {:.4}", self.accuracy());
        let _ = writeln!(out);
        let _ = writeln!(out, "bin   items   accuracy   (bin 1 = least frequent)");
        for cell in &self.bins {
            let acc = match cell.accuracy() {
                Some(a) => format!("{a:.4}"),
                None => "n/a".to_string(),
            };
            let _ = writeln!(out, "{:<5} {:<7} {}", cell.bin, cell.items, acc);
        }
        let _ = writeln!(out);
        match self.completion_rate() {
            Some(rate) => {
                let _ = writeln!(
                    out,
                    "word completion: {:.4} ({}/{} eligible)",
                    rate, self.completion_completed, self.completion_eligible
                );
            }
            None => {
                let _ = writeln!(out, "word completion: n/a");
            }
        }
        out
    }

    /// Header line for TSV output with one bin column per bin.
    pub fn tsv_header(k: usize) -> String {
        let mut head = "predictor\tconfig\titems\taccuracy".to_string();
        for bin in 1..=k {
            let _ = write!(head, "\tbin{bin}");
        }
        head.push_str("\tcompletion");
        head
    }

    /// One tab-separated row matching [`EvalReport::tsv_header`]. Floats keep
    /// full precision so identical runs serialize identically.
    pub fn tsv_row(&self) -> String {
        let mut row = format!(
            "{}\t{}\t{}\t{}",
            self.predictor,
            self.config_digest,
            self.items,
            self.accuracy()
        );
        for cell in &self.bins {
            match cell.accuracy() {
                Some(a) => {
                    let _ = write!(row, "\t{a}");
                }
                None => row.push_str("\tNA"),
            }
        }
        match self.completion_rate() {
            Some(rate) => {
                let _ = write!(row, "\t{rate}");
            }
            None => row.push_str("\tNA"),
        }
        row
    }

    pub fn to_tsv(&self) -> String {
        format!("{}\n{}\n", Self::tsv_header(self.bins.len()), self.tsv_row())
    }
}

/// Several reports as one TSV table, one row per predictor. All reports
/// must use the same bin count.
pub fn reports_to_tsv(reports: &[EvalReport]) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("no reports to serialize".to_string()))?;
    let k = first.bins.len();
    let mut out = EvalReport::tsv_header(k);
    out.push('\n');
    for report in reports {
        if report.bins.len() != k {
            return Err(Error::InvalidArgument(format!(
                "cannot mix bin counts in one table: {} vs {}",
                report.bins.len(),
                k
            )));
        }
        out.push_str(&report.tsv_row());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{frequency_bins, Vocabulary};
    use crate::eval::NgramPredictor;
    use crate::ngram::{count, estimate};
    use std::collections::HashSet;

    fn fixture() -> (Vec<Vec<u32>>, Vocabulary) {
        let sentences = [
            "up@@ date the code",
            "up@@ grade the code",
            "run the code now",
            "run the test now",
        ];
        let pieces: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect();
        let vocab = Vocabulary::build(&pieces);
        let ids = pieces.iter().map(|s| vocab.encode(s)).collect();
        (ids, vocab)
    }

    fn word_set() -> HashSet<String> {
        ["update", "upgrade", "run", "the", "code", "now", "test"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn report_matches_the_standalone_metrics() {
        let (corpus, vocab) = fixture();
        let model = estimate(&count(&corpus, 3).unwrap()).unwrap();
        let predictor = NgramPredictor::new(&model, &vocab);
        let bins = frequency_bins(&vocab, 5).unwrap();
        let items = crate::pipeline::build_eval_set(&corpus, 100);
        let words = word_set();
        let ctx = CompletionContext {
            vocab: &vocab,
            marker: "@@",
            words: &words,
        };
        let report =
            EvalReport::build(&predictor, &items, &bins, Some(&ctx), "cafe0123").unwrap();

        assert_eq!(report.predictor, "3-gram-kneser-ney");
        assert_eq!(report.items, items.len());
        let overall = crate::eval::mlm_accuracy(&predictor, &items).unwrap();
        assert_eq!(report.accuracy(), overall);
        let cells = crate::eval::bin_accuracy(&predictor, &items, &bins).unwrap();
        assert_eq!(report.bins, cells);
        let rate = crate::eval::word_completion(&predictor, &items, &ctx).unwrap();
        assert_eq!(report.completion_rate(), Some(rate));

        // Weighted bin accuracies recompose the overall accuracy.
        let weighted: f64 = report
            .bins
            .iter()
            .filter_map(|c| c.accuracy().map(|a| a * c.items as f64))
            .sum();
        assert!((weighted / report.items as f64 - overall).abs() < 1e-9);
        assert_eq!(
            report.bins.iter().map(|c| c.items).sum::<usize>(),
            report.items
        );
    }

    #[test]
    fn report_without_completion_context_reports_none() {
        let (corpus, vocab) = fixture();
        let model = estimate(&count(&corpus, 3).unwrap()).unwrap();
        let predictor = NgramPredictor::new(&model, &vocab);
        let bins = frequency_bins(&vocab, 5).unwrap();
        let items = crate::pipeline::build_eval_set(&corpus, 100);
        let report = EvalReport::build(&predictor, &items, &bins, None, "cafe0123").unwrap();
        assert_eq!(report.completion_rate(), None);
        assert!(report.to_text().contains("word completion: n/a"));
        assert!(report.tsv_row().ends_with("\tNA"));
    }

    #[test]
    fn empty_eval_set_is_rejected() {
        let (corpus, vocab) = fixture();
        let model = estimate(&count(&corpus, 3).unwrap()).unwrap();
        let predictor = NgramPredictor::new(&model, &vocab);
        let bins = frequency_bins(&vocab, 5).unwrap();
        assert!(matches!(
            EvalReport::build(&predictor, &[], &bins, None, "d"),
            Err(Error::EmptyEvalSet)
        ));
    }

    #[test]
    fn text_and_tsv_are_deterministic() {
        let report = EvalReport {
            predictor: "3-gram-kneser-ney".to_string(),
            config_digest: "cafe0123".to_string(),
            items: 8,
            correct: 5,
            bins: vec![
                BinAccuracy {
                    bin: 1,
                    items: 0,
                    correct: 0,
                },
                BinAccuracy {
                    bin: 2,
                    items: 8,
                    correct: 5,
                },
            ],
            completion_eligible: 4,
            completion_completed: 3,
            has_completion: true,
        };
        assert_eq!(
            report.to_text(),
            "predictor:       3-gram-kneser-ney\n\
             config:          cafe0123\n\
             items:           8\n\
             mlm accuracy:    0.6250\n\
             \n\
             bin   items   accuracy   (bin 1 = least frequent)\n\
             1     0       n/a\n\
             2     8       0.6250\n\
             \n\
             word completion: 0.7500 (3/4 eligible)\n"
        );
        assert_eq!(
            report.to_tsv(),
            "predictor\tconfig\titems\taccuracy\tbin1\tbin2\tcompletion\n\
             3-gram-kneser-ney\tcafe0123\t8\t0.625\tNA\t0.625\t0.75\n"
        );
    }

    #[test]
    fn tables_require_a_consistent_bin_count() {
        let cell = |bin| BinAccuracy {
            bin,
            items: 1,
            correct: 1,
        };
        let a = EvalReport {
            predictor: "a".into(),
            config_digest: "d".into(),
            items: 1,
            correct: 1,
            bins: vec![cell(1)],
            completion_eligible: 0,
            completion_completed: 0,
            has_completion: false,
        };
        let mut b = a.clone();
        b.predictor = "b".into();
        b.bins = vec![cell(1), cell(2)];
        assert!(reports_to_tsv(&[a.clone(), b]).is_err());
        assert!(reports_to_tsv(&[]).is_err());
        let table = reports_to_tsv(&[a.clone(), a]).unwrap();
        assert_eq!(table.lines().count(), 3);
    }

    #[test]
    fn transformer_report_agrees_with_validation_accuracy() {
        use crate::eval::TransformerPredictor;
        use crate::train::{mode_by_name, validation_accuracy, TrainConfig};
        use crate::transformer::{ModelConfig, ModelParams};

        let (corpus, vocab) = fixture();
        let config = ModelConfig {
            layers: 1,
            heads: 2,
            dim: 16,
            ffn_dim: 32,
            max_seq: 12,
            dropout: 0.0,
            half_width: None,
            vocab: vocab.len(),
        };
        let model = ModelParams::<f32>::init(&config, 3).unwrap();
        let mode = mode_by_name("baseline").unwrap();
        let train = TrainConfig::pretrain("baseline", 3);
        let predictor = TransformerPredictor::new(&model, mode, &train);
        let items = crate::pipeline::build_eval_set(&corpus, 100);
        let via_report = crate::eval::mlm_accuracy(&predictor, &items).unwrap();
        let via_validation = validation_accuracy(mode, &train, &model, &items).unwrap();
        assert_eq!(via_report, via_validation);
    }
}
