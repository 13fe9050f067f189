//! Interpolated Kneser-Ney estimation with a per-order add-0.1 fallback
//! when counts-of-counts degenerate.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::UNK_ID;
use crate::ngram::counts::NgramCounts;
use crate::ngram::model::{Entry, NgramModel};
use crate::{Error, Result};

const ADD_K: f64 = 0.1;
/// log10 floor standing in for effectively-zero probabilities and weights.
const LOG_FLOOR: f64 = -99.0;

#[derive(Debug, Clone, Copy)]
enum Smoothing {
    /// Absolute discount D = n1/(n1+2·n2).
    KneserNey { discount: f64 },
    /// Additive smoothing over the order's observed final-word types; used
    /// whenever n1 or n2 is zero so tiny corpora still yield valid models.
    AddK { k: f64 },
}

fn pick_smoothing(adjusted: &BTreeMap<Vec<u32>, u64>) -> Smoothing {
    let n1 = adjusted.values().filter(|&&c| c == 1).count();
    let n2 = adjusted.values().filter(|&&c| c == 2).count();
    if n1 > 0 && n2 > 0 {
        let (n1, n2) = (n1 as f64, n2 as f64);
        Smoothing::KneserNey {
            discount: n1 / (n1 + 2.0 * n2),
        }
    } else {
        Smoothing::AddK { k: ADD_K }
    }
}

struct HistoryStats {
    total: u64,
    types: usize,
}

fn history_stats(adjusted: &BTreeMap<Vec<u32>, u64>, n: usize) -> BTreeMap<Vec<u32>, HistoryStats> {
    let mut stats: BTreeMap<Vec<u32>, HistoryStats> = BTreeMap::new();
    for (key, &c) in adjusted {
        let entry = stats
            .entry(key[..n - 1].to_vec())
            .or_insert(HistoryStats { total: 0, types: 0 });
        entry.total += c;
        entry.types += 1;
    }
    stats
}

/// Builds a backoff model from counts.
///
/// The top order keeps raw counts; each lower order uses continuation
/// counts (distinct preceding words one order up). Per order, probabilities
/// are interpolated Kneser-Ney unless counts-of-counts degenerate, in which
/// case additive smoothing over that order's observed final-word types takes
/// over. The unigram base distribution is uniform over the observed
/// unigrams plus UNK, so unknown tokens keep a little smoothed mass.
/// Backoff weights are set so that every history's conditional distribution
/// sums to one over the vocabulary.
pub fn estimate(counts: &NgramCounts) -> Result<NgramModel> {
    let order = counts.order();
    if counts.table(1).is_empty() {
        return Err(Error::EmptyCorpus("estimate: counts contain no unigrams"));
    }

    // Adjusted counts per order; BTreeMaps keep every later float
    // accumulation in key order, which makes ARPA output byte-stable.
    let mut adjusted: Vec<BTreeMap<Vec<u32>, u64>> = Vec::with_capacity(order);
    for n in 1..=order {
        if n == order {
            adjusted.push(counts.table(n).iter().map(|(k, &c)| (k.clone(), c)).collect());
        } else {
            let mut cont: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
            for key in counts.table(n + 1).keys() {
                *cont.entry(key[1..].to_vec()).or_insert(0) += 1;
            }
            adjusted.push(cont);
        }
    }

    let smoothing: Vec<Smoothing> = adjusted.iter().map(pick_smoothing).collect();

    // Stored conditional probabilities per order, linear space.
    let mut probs: Vec<BTreeMap<Vec<u32>, f64>> = Vec::with_capacity(order);

    let unigrams = &adjusted[0];
    let total = unigrams.values().sum::<u64>() as f64;
    let types = unigrams.len();
    let mut p1: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    match smoothing[0] {
        Smoothing::KneserNey { discount } => {
            let support = types + usize::from(!unigrams.contains_key([UNK_ID].as_slice()));
            let lambda = discount * types as f64 / total;
            let floor = lambda / support as f64;
            for (key, &c) in unigrams {
                p1.insert(key.clone(), (c as f64 - discount).max(0.0) / total + floor);
            }
            p1.entry(vec![UNK_ID]).or_insert(floor);
        }
        Smoothing::AddK { k } => {
            let denom = total + k * types as f64;
            for (key, &c) in unigrams {
                p1.insert(key.clone(), (c as f64 + k) / denom);
            }
        }
    }
    probs.push(p1);

    for n in 2..=order {
        let adj = &adjusted[n - 1];
        let stats = history_stats(adj, n);
        let finals = adj.keys().map(|key| key[n - 1]).collect::<BTreeSet<u32>>();
        let g = finals.len() as f64;
        let mut table: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (key, &c) in adj {
            let st = &stats[&key[..n - 1]];
            let p = match smoothing[n - 1] {
                Smoothing::KneserNey { discount } => {
                    let s = st.total as f64;
                    let lambda = discount * st.types as f64 / s;
                    let lower = probs[n - 2]
                        .get(&key[1..])
                        .copied()
                        .expect("counted n-gram suffix must be a counted (n-1)-gram");
                    (c as f64 - discount).max(0.0) / s + lambda * lower
                }
                Smoothing::AddK { k } => (c as f64 + k) / (st.total as f64 + k * g),
            };
            table.insert(key.clone(), p);
        }
        probs.push(table);
    }

    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = probs
        .iter()
        .map(|table| {
            table
                .iter()
                .map(|(k, &p)| {
                    let entry = Entry {
                        logp: p.log10().max(LOG_FLOOR),
                        logbo: None,
                    };
                    (k.clone(), entry)
                })
                .collect()
        })
        .collect();

    // Backoff weight for each history appearing one order up: the mass the
    // stored entries leave unclaimed, divided by the lower-order mass of the
    // same words. Histories that only ever occur as context (the all-BOS
    // prefixes) get a placeholder probability.
    for n in 1..order {
        let mut stored_sum: BTreeMap<&[u32], f64> = BTreeMap::new();
        let mut lower_sum: BTreeMap<&[u32], f64> = BTreeMap::new();
        for (key, &p) in &probs[n] {
            let lower = probs[n - 1]
                .get(&key[1..])
                .copied()
                .expect("counted n-gram suffix must be a counted (n-1)-gram");
            *stored_sum.entry(&key[..n]).or_insert(0.0) += p;
            *lower_sum.entry(&key[..n]).or_insert(0.0) += lower;
        }
        for (h, &seen) in &stored_sum {
            let num = (1.0 - seen).max(0.0);
            let den = (1.0 - lower_sum[h]).max(0.0);
            let logbo = if den < 1e-12 {
                0.0
            } else {
                (num / den).log10().max(LOG_FLOOR)
            };
            let entry = tables[n - 1].entry(h.to_vec()).or_insert(Entry {
                logp: LOG_FLOOR,
                logbo: None,
            });
            entry.logbo = Some(logbo);
        }
    }

    Ok(NgramModel::from_tables(order, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BOS_ID, EOS_ID, MASK_ID};
    use crate::ngram::count;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const A: u32 = 10;
    const B: u32 = 11;
    const C: u32 = 12;
    const D: u32 = 13;

    /// Textbook interpolated Kneser-Ney evaluated by direct recursion, with
    /// its own counting loop and per-history linear scans — no backoff
    /// tables. Serves as the oracle the table-based model must match.
    struct KnOracle {
        grams: Vec<BTreeMap<Vec<u32>, u64>>,
        kind: Vec<OracleKind>,
        support: BTreeSet<u32>,
    }

    #[derive(Clone, Copy)]
    enum OracleKind {
        Kn(f64),
        Add(f64),
    }

    impl KnOracle {
        fn build(corpus: &[Vec<u32>], order: usize) -> KnOracle {
            let mut raw: Vec<BTreeMap<Vec<u32>, u64>> = vec![BTreeMap::new(); order];
            for n in 1..=order {
                for sentence in corpus {
                    let mut seq = vec![BOS_ID; n - 1];
                    seq.extend_from_slice(sentence);
                    seq.push(EOS_ID);
                    for start in 0..=seq.len() - n {
                        *raw[n - 1].entry(seq[start..start + n].to_vec()).or_insert(0) += 1;
                    }
                }
            }
            let mut grams = raw.clone();
            for n in 1..order {
                let mut cont: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
                for key in raw[n].keys() {
                    *cont.entry(key[1..].to_vec()).or_insert(0) += 1;
                }
                grams[n - 1] = cont;
            }
            let kind: Vec<OracleKind> = grams
                .iter()
                .map(|g| {
                    let n1 = g.values().filter(|&&c| c == 1).count() as f64;
                    let n2 = g.values().filter(|&&c| c == 2).count() as f64;
                    if n1 > 0.0 && n2 > 0.0 {
                        OracleKind::Kn(n1 / (n1 + 2.0 * n2))
                    } else {
                        OracleKind::Add(0.1)
                    }
                })
                .collect();
            let mut support: BTreeSet<u32> = grams[0].keys().map(|k| k[0]).collect();
            if matches!(kind[0], OracleKind::Kn(_)) {
                support.insert(UNK_ID);
            }
            KnOracle { grams, kind, support }
        }

        fn prob(&self, h: &[u32], w: u32) -> f64 {
            let n = h.len() + 1;
            if n == 1 {
                let uni = &self.grams[0];
                let total = uni.values().sum::<u64>() as f64;
                let types = uni.len() as f64;
                let c = uni.get([w].as_slice()).copied().unwrap_or(0) as f64;
                return match self.kind[0] {
                    OracleKind::Kn(d) => {
                        if !self.support.contains(&w) {
                            return 0.0;
                        }
                        (c - d).max(0.0) / total
                            + (d * types / total) / self.support.len() as f64
                    }
                    OracleKind::Add(k) => {
                        if c == 0.0 {
                            0.0
                        } else {
                            (c + k) / (total + k * types)
                        }
                    }
                };
            }
            let table = &self.grams[n - 1];
            let followers: Vec<(u32, u64)> = table
                .iter()
                .filter(|(key, _)| &key[..n - 1] == h)
                .map(|(key, &c)| (key[n - 1], c))
                .collect();
            if followers.is_empty() {
                return self.prob(&h[1..], w);
            }
            let s = followers.iter().map(|&(_, c)| c).sum::<u64>() as f64;
            let u = followers.len() as f64;
            let c = table
                .get([h, &[w]].concat().as_slice())
                .copied()
                .unwrap_or(0) as f64;
            match self.kind[n - 1] {
                OracleKind::Kn(d) => {
                    (c - d).max(0.0) / s + (d * u / s) * self.prob(&h[1..], w)
                }
                OracleKind::Add(k) => {
                    let g = table.keys().map(|key| key[n - 1]).collect::<BTreeSet<_>>().len()
                        as f64;
                    if c > 0.0 {
                        (c + k) / (s + k * g)
                    } else {
                        let seen: f64 =
                            followers.iter().map(|&(_, cf)| (cf as f64 + k) / (s + k * g)).sum();
                        let lower: f64 =
                            followers.iter().map(|&(wf, _)| self.prob(&h[1..], wf)).sum();
                        let num = (1.0 - seen).max(0.0);
                        let den = (1.0 - lower).max(0.0);
                        if den < 1e-12 {
                            0.0
                        } else {
                            (num / den) * self.prob(&h[1..], w)
                        }
                    }
                }
            }
        }
    }

    fn model_prob(model: &NgramModel, h: &[u32], w: u32) -> f64 {
        10f64.powf(model.cond_logprob(h, w))
    }

    /// Five sentences chosen so every order keeps usable counts-of-counts
    /// and takes the Kneser-Ney path.
    fn mixed_corpus() -> Vec<Vec<u32>> {
        vec![
            vec![A, B, C],
            vec![A, B, D],
            vec![B, C, A],
            vec![A, B, C],
            vec![D, A, B],
        ]
    }

    fn oracle_histories(corpus: &[Vec<u32>], order: usize) -> Vec<Vec<u32>> {
        let counts = count(corpus, order).unwrap();
        let mut histories = vec![vec![]];
        for n in 2..=order {
            let mut hs: Vec<Vec<u32>> = counts
                .table(n)
                .keys()
                .map(|key| key[..n - 1].to_vec())
                .collect();
            hs.sort();
            hs.dedup();
            histories.extend(hs);
        }
        histories.push(vec![MASK_ID]);
        if order >= 3 {
            histories.push(vec![MASK_ID, MASK_ID]);
        }
        histories
    }

    fn assert_matches_oracle(corpus: &[Vec<u32>], order: usize) {
        let model = estimate(&count(corpus, order).unwrap()).unwrap();
        let oracle = KnOracle::build(corpus, order);
        let mut words: Vec<u32> = oracle.support.iter().copied().collect();
        words.extend([BOS_ID, MASK_ID, 9999]);
        for h in oracle_histories(corpus, order) {
            for &w in &words {
                let got = model_prob(&model, &h, w);
                let want = oracle.prob(&h, w);
                assert_relative_eq!(got, want, epsilon = 1e-12, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn matches_oracle_on_repeated_trigram_corpus() {
        assert_matches_oracle(&vec![vec![A, A, A]; 3], 3);
    }

    #[test]
    fn matches_oracle_on_two_token_corpus() {
        assert_matches_oracle(&vec![vec![A, B]; 10], 3);
    }

    #[test]
    fn matches_oracle_on_mixed_corpus() {
        assert_matches_oracle(&mixed_corpus(), 3);
    }

    #[test]
    fn matches_oracle_on_random_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let corpus: Vec<Vec<u32>> = (0..8)
            .map(|_| {
                let len = rng.gen_range(1..=6);
                (0..len).map(|_| rng.gen_range(10..15)).collect()
            })
            .collect();
        assert_matches_oracle(&corpus, 3);
        assert_matches_oracle(&corpus, 2);
    }

    #[test]
    fn repeated_trigram_probability_by_hand() {
        // counts: (a,a,a)=3, (a,a,EOS)=3 → history (a,a) totals 6 over
        // two of the two global final types, so add-0.1 gives
        // (3+0.1)/(6+0.2) = 1/2 exactly.
        let model = estimate(&count(&vec![vec![A, A, A]; 3], 3).unwrap()).unwrap();
        assert_relative_eq!(model_prob(&model, &[A, A], A), 0.5, epsilon = 1e-12);
        assert_relative_eq!(model_prob(&model, &[A, A], EOS_ID), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn continuation_unigrams_by_hand() {
        // a, b and EOS each follow exactly one distinct word, so the
        // unigram level sees three equal continuation counts → 1/3 each.
        let model = estimate(&count(&vec![vec![A, B]; 10], 3).unwrap()).unwrap();
        for w in [A, B, EOS_ID] {
            assert_relative_eq!(model_prob(&model, &[], w), 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unigram_only_model_by_hand() {
        let model = estimate(&count(&vec![vec![A, B]; 10], 1).unwrap()).unwrap();
        for w in [A, B, EOS_ID] {
            assert_relative_eq!(model_prob(&model, &[], w), 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_corpus_takes_the_kneser_ney_path_everywhere() {
        let oracle = KnOracle::build(&mixed_corpus(), 3);
        assert!(oracle.kind.iter().all(|k| matches!(k, OracleKind::Kn(_))));
    }

    fn assert_normalized(corpus: &[Vec<u32>], order: usize) {
        let counts = count(corpus, order).unwrap();
        let model = estimate(&counts).unwrap();
        let max_id = corpus.iter().flatten().copied().max().unwrap_or(0) + 5;
        for h in oracle_histories(corpus, order) {
            let sum: f64 = (0..=max_id).map(|w| model_prob(&model, &h, w)).sum();
            assert!(
                (sum - 1.0).abs() < 1e-6,
                "Σ p(w | {h:?}) = {sum} on corpus {corpus:?}"
            );
        }
    }

    #[test]
    fn distributions_sum_to_one_on_fixture_corpora() {
        assert_normalized(&vec![vec![A, B]; 10], 3);
        assert_normalized(&vec![vec![A, A, A]; 3], 3);
        assert_normalized(&mixed_corpus(), 3);
    }

    #[test]
    fn bos_history_sums_to_one() {
        for corpus in [vec![vec![A, B]; 10], mixed_corpus()] {
            let model = estimate(&count(&corpus, 3).unwrap()).unwrap();
            let sum: f64 = (0..20).map(|w| model_prob(&model, &[BOS_ID, BOS_ID], w)).sum();
            assert!((sum - 1.0).abs() < 1e-6, "Σ p(w | BOS,BOS) = {sum}");
        }
    }

    #[test]
    fn add_k_probability_is_monotone_in_count() {
        let base = count(&vec![vec![A, A, A]; 3], 3).unwrap();
        let mut last = 0.0;
        for extra in 0..6 {
            let mut counts = base.clone();
            counts.bump(&[A, A, A], extra);
            let model = estimate(&counts).unwrap();
            let p = model_prob(&model, &[A, A], A);
            assert!(p >= last, "p dropped from {last} to {p} at extra={extra}");
            last = p;
        }
    }

    #[test]
    fn unknown_words_keep_smoothed_mass_under_kneser_ney() {
        let model = estimate(&count(&mixed_corpus(), 3).unwrap()).unwrap();
        assert!(model_prob(&model, &[], UNK_ID) > 0.0);
        assert!(model_prob(&model, &[A, B], UNK_ID) > 0.0);
    }

    #[test]
    fn long_histories_are_truncated() {
        let model = estimate(&count(&mixed_corpus(), 3).unwrap()).unwrap();
        assert_eq!(
            model.cond_logprob(&[C, A, B], C),
            model.cond_logprob(&[A, B], C)
        );
    }

}
