use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::distill::SoftLabelSet;
use crate::pipeline::{
    build_streams, build_windows, make_mask_plan, window_at, Batch, WindowExample,
    DEFAULT_MASK_RATE,
};
use crate::train::TrainConfig;
use crate::transformer::{ModelConfig, PoolMode};
use crate::{Error, Result};

/// Mode-specific training examples materialized once before the step loop.
pub enum TrainData {
    /// Fixed-length token blocks cut from the corpus stream.
    Blocks(Vec<Vec<u32>>),
    /// One fixed-width window per corpus position.
    Windows(Vec<WindowExample>),
}

impl TrainData {
    pub fn len(&self) -> usize {
        match self {
            TrainData::Blocks(blocks) => blocks.len(),
            TrainData::Windows(windows) => windows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A pretraining strategy: how examples are built, how batches are drawn,
/// what attention shape the encoder gets, and how downstream tasks pool.
///
/// Modes are stateless; everything they need arrives through the config.
pub trait TrainingMode: Sync {
    /// Registry key, also used in checkpoints and reports.
    fn name(&self) -> &'static str;

    /// Attention band half-width this mode imposes on the encoder, if any.
    fn band_half_width(&self, config: &TrainConfig) -> Result<Option<usize>>;

    /// Sentence pooling used when a task head sits on top of the encoder.
    fn pooling(&self) -> PoolMode;

    /// Whether pretraining consumes distilled soft labels.
    fn wants_labels(&self) -> bool {
        false
    }

    /// Materialize the training examples for `corpus`.
    fn prepare(
        &self,
        corpus: &[Vec<u32>],
        model: &ModelConfig,
        config: &TrainConfig,
    ) -> Result<TrainData>;

    /// Draw one training batch. Draw order is fixed per mode so equal seeds
    /// give equal batches.
    fn next_batch(
        &self,
        data: &TrainData,
        config: &TrainConfig,
        vocab: usize,
        labels: Option<&SoftLabelSet>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch>;

    /// Reshape a full-sentence eval item (mask already placed at `position`)
    /// into this mode's input convention. Returns the tokens to encode and
    /// the index of the masked slot within them.
    fn shape_eval_input(
        &self,
        tokens: &[u32],
        position: usize,
        config: &TrainConfig,
    ) -> Result<(Vec<u32>, usize)>;
}

fn stream_prepare(corpus: &[Vec<u32>], model: &ModelConfig) -> Result<TrainData> {
    Ok(TrainData::Blocks(build_streams(corpus, model.max_seq)?))
}

fn expect_blocks<'a>(data: &'a TrainData, mode: &str) -> Result<&'a [Vec<u32>]> {
    match data {
        TrainData::Blocks(blocks) => Ok(blocks),
        TrainData::Windows(_) => Err(Error::InvalidArgument(format!(
            "{mode} mode trains on stream blocks, got window data"
        ))),
    }
}

fn expect_windows<'a>(data: &'a TrainData, mode: &str) -> Result<&'a [WindowExample]> {
    match data {
        TrainData::Windows(windows) => Ok(windows),
        TrainData::Blocks(_) => Err(Error::InvalidArgument(format!(
            "{mode} mode trains on windows, got stream blocks"
        ))),
    }
}

/// Uniform-with-replacement block draw; returns the picked indices alongside
/// the rows so label lookups can key on the block index.
fn draw_blocks(
    blocks: &[Vec<u32>],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Vec<u32>>) {
    let mut picks = Vec::with_capacity(batch_size);
    let mut rows = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let i = rng.gen_range(0..blocks.len());
        picks.push(i);
        rows.push(blocks[i].clone());
    }
    (picks, rows)
}

fn stream_batch(
    data: &TrainData,
    mode: &str,
    config: &TrainConfig,
    vocab: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Batch)> {
    let blocks = expect_blocks(data, mode)?;
    if blocks.is_empty() {
        return Err(Error::EmptyCorpus("stream training blocks"));
    }
    let (picks, rows) = draw_blocks(blocks, config.batch_size, rng);
    let plan = make_mask_plan(&rows, vocab, DEFAULT_MASK_RATE, rng)?;
    let batch = Batch::from_plan(&rows, &plan)?;
    Ok((picks, batch))
}

/// Full-context masked-block training.
pub struct BaselineMode;

impl TrainingMode for BaselineMode {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn band_half_width(&self, _config: &TrainConfig) -> Result<Option<usize>> {
        Ok(None)
    }

    fn pooling(&self) -> PoolMode {
        PoolMode::First
    }

    fn prepare(
        &self,
        corpus: &[Vec<u32>],
        model: &ModelConfig,
        _config: &TrainConfig,
    ) -> Result<TrainData> {
        stream_prepare(corpus, model)
    }

    fn next_batch(
        &self,
        data: &TrainData,
        config: &TrainConfig,
        vocab: usize,
        _labels: Option<&SoftLabelSet>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch> {
        Ok(stream_batch(data, self.name(), config, vocab, rng)?.1)
    }

    fn shape_eval_input(
        &self,
        tokens: &[u32],
        position: usize,
        _config: &TrainConfig,
    ) -> Result<(Vec<u32>, usize)> {
        Ok((tokens.to_vec(), position))
    }
}

/// Sliding-window training: the encoder only ever sees `context` tokens with
/// the masked slot at the center.
pub struct WindowMode;

impl WindowMode {
    fn context(config: &TrainConfig) -> Result<usize> {
        config.context.ok_or_else(|| {
            Error::InvalidArgument("window mode requires a context width".to_string())
        })
    }
}

impl TrainingMode for WindowMode {
    fn name(&self) -> &'static str {
        "window"
    }

    fn band_half_width(&self, _config: &TrainConfig) -> Result<Option<usize>> {
        Ok(None)
    }

    fn pooling(&self) -> PoolMode {
        PoolMode::First
    }

    fn prepare(
        &self,
        corpus: &[Vec<u32>],
        model: &ModelConfig,
        config: &TrainConfig,
    ) -> Result<TrainData> {
        let context = Self::context(config)?;
        if context > model.max_seq {
            return Err(Error::InvalidArgument(format!(
                "window context {context} exceeds model max_seq {}",
                model.max_seq
            )));
        }
        Ok(TrainData::Windows(build_windows(corpus, context)?))
    }

    fn next_batch(
        &self,
        data: &TrainData,
        config: &TrainConfig,
        _vocab: usize,
        _labels: Option<&SoftLabelSet>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch> {
        let windows = expect_windows(data, self.name())?;
        if windows.is_empty() {
            return Err(Error::EmptyCorpus("window training examples"));
        }
        let context = Self::context(config)?;
        let mut picked = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            picked.push(windows[rng.gen_range(0..windows.len())].clone());
        }
        let batch = Batch::from_windows(&picked)?;
        assert_eq!(
            batch.cols(),
            context,
            "window batch width must equal the configured context"
        );
        Ok(batch)
    }

    fn shape_eval_input(
        &self,
        tokens: &[u32],
        position: usize,
        config: &TrainConfig,
    ) -> Result<(Vec<u32>, usize)> {
        let context = Self::context(config)?;
        let window = window_at(tokens, position, context)?;
        Ok((window, (context - 1) / 2))
    }
}

/// Baseline training with the encoder's self-attention restricted to a band.
pub struct BandedMode;

impl TrainingMode for BandedMode {
    fn name(&self) -> &'static str {
        "banded"
    }

    fn band_half_width(&self, config: &TrainConfig) -> Result<Option<usize>> {
        match config.half_width {
            Some(h) => Ok(Some(h)),
            None => Err(Error::InvalidArgument(
                "banded mode requires a band half-width".to_string(),
            )),
        }
    }

    fn pooling(&self) -> PoolMode {
        PoolMode::Mean
    }

    fn prepare(
        &self,
        corpus: &[Vec<u32>],
        model: &ModelConfig,
        _config: &TrainConfig,
    ) -> Result<TrainData> {
        stream_prepare(corpus, model)
    }

    fn next_batch(
        &self,
        data: &TrainData,
        config: &TrainConfig,
        vocab: usize,
        _labels: Option<&SoftLabelSet>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch> {
        Ok(stream_batch(data, self.name(), config, vocab, rng)?.1)
    }

    fn shape_eval_input(
        &self,
        tokens: &[u32],
        position: usize,
        _config: &TrainConfig,
    ) -> Result<(Vec<u32>, usize)> {
        Ok((tokens.to_vec(), position))
    }
}

/// Baseline training against soft targets distilled from an n-gram model,
/// interpolated with the one-hot gold by `lambda`.
pub struct DistillMode;

impl TrainingMode for DistillMode {
    fn name(&self) -> &'static str {
        "distill"
    }

    fn band_half_width(&self, _config: &TrainConfig) -> Result<Option<usize>> {
        Ok(None)
    }

    fn pooling(&self) -> PoolMode {
        PoolMode::First
    }

    fn wants_labels(&self) -> bool {
        true
    }

    fn prepare(
        &self,
        corpus: &[Vec<u32>],
        model: &ModelConfig,
        _config: &TrainConfig,
    ) -> Result<TrainData> {
        stream_prepare(corpus, model)
    }

    fn next_batch(
        &self,
        data: &TrainData,
        config: &TrainConfig,
        vocab: usize,
        labels: Option<&SoftLabelSet>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch> {
        let labels = labels.ok_or_else(|| {
            Error::InvalidArgument("distill mode requires a soft label set".to_string())
        })?;
        let (picks, batch) = stream_batch(data, self.name(), config, vocab, rng)?;
        let mut soft = Vec::with_capacity(batch.masks.len());
        for &(row, pos) in &batch.masks {
            soft.push(labels.require(picks[row], pos)?.clone());
        }
        batch.with_soft_targets(soft)
    }

    fn shape_eval_input(
        &self,
        tokens: &[u32],
        position: usize,
        _config: &TrainConfig,
    ) -> Result<(Vec<u32>, usize)> {
        Ok((tokens.to_vec(), position))
    }
}

static MODES: [&(dyn TrainingMode + Sync); 4] =
    [&BaselineMode, &WindowMode, &BandedMode, &DistillMode];

/// All registered training modes, in registry order.
pub fn training_modes() -> &'static [&'static (dyn TrainingMode + Sync)] {
    &MODES
}

/// Look up a training mode by its registry name.
pub fn mode_by_name(name: &str) -> Result<&'static dyn TrainingMode> {
    for &mode in &MODES {
        if mode.name() == name {
            return Ok(mode);
        }
    }
    let known: Vec<&str> = MODES.iter().map(|m| m.name()).collect();
    Err(Error::InvalidArgument(format!(
        "unknown training mode {name:?}; expected one of {}",
        known.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Vocabulary, EOS_ID, MASK_ID, NUM_SPECIALS, PAD_ID};
    use crate::distill::build_label_set;
    use crate::ngram::{count, estimate};
    use crate::pipeline::{BatchTargets, MaskAction, MaskEntry, MaskPlan};
    use rand::SeedableRng;

    const VOCAB: usize = 40;

    fn toy_corpus() -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        (0..30)
            .map(|_| {
                let len = rng.gen_range(3..=9);
                (0..len)
                    .map(|_| rng.gen_range(NUM_SPECIALS as u32..VOCAB as u32))
                    .collect()
            })
            .collect()
    }

    fn toy_model() -> ModelConfig {
        let mut m = ModelConfig::desk(VOCAB);
        m.max_seq = 16;
        m
    }

    #[test]
    fn registry_resolves_every_mode_by_name() {
        for name in ["baseline", "window", "banded", "distill"] {
            assert_eq!(mode_by_name(name).unwrap().name(), name);
        }
        let err = match mode_by_name("bigger") {
            Ok(_) => panic!("unknown mode should be rejected"),
            Err(err) => err,
        };
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(err.to_string().contains("baseline, window, banded, distill"));
    }

    #[test]
    fn stream_modes_draw_identical_batches_at_equal_seeds() {
        let corpus = toy_corpus();
        let model = toy_model();
        let base_cfg = TrainConfig::pretrain("baseline", 4);
        let mut banded_cfg = TrainConfig::pretrain("banded", 4);
        banded_cfg.half_width = Some(2);

        let baseline = mode_by_name("baseline").unwrap();
        let banded = mode_by_name("banded").unwrap();
        let data_a = baseline.prepare(&corpus, &model, &base_cfg).unwrap();
        let data_b = banded.prepare(&corpus, &model, &banded_cfg).unwrap();

        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let a = baseline
                .next_batch(&data_a, &base_cfg, VOCAB, None, &mut rng_a)
                .unwrap();
            let b = banded
                .next_batch(&data_b, &banded_cfg, VOCAB, None, &mut rng_b)
                .unwrap();
            assert_eq!(a.tokens, b.tokens);
            assert_eq!(a.masks, b.masks);
            match (&a.targets, &b.targets) {
                (BatchTargets::Hard(ta), BatchTargets::Hard(tb)) => assert_eq!(ta, tb),
                _ => panic!("stream modes should produce hard targets"),
            }
        }
    }

    #[test]
    fn window_batches_are_exactly_context_wide() {
        let corpus = toy_corpus();
        let model = toy_model();
        let mut cfg = TrainConfig::pretrain("window", 4);
        cfg.context = Some(5);
        let mode = mode_by_name("window").unwrap();
        let data = mode.prepare(&corpus, &model, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let batch = mode.next_batch(&data, &cfg, VOCAB, None, &mut rng).unwrap();
            assert_eq!(batch.cols(), 5);
            assert_eq!(batch.rows(), cfg.batch_size);
            for &(row, pos) in &batch.masks {
                assert_eq!(pos, 2);
                assert_eq!(batch.tokens[row][pos], MASK_ID);
            }
        }
    }

    #[test]
    fn window_context_wider_than_model_is_rejected() {
        let corpus = toy_corpus();
        let model = toy_model();
        let mut cfg = TrainConfig::pretrain("window", 4);
        cfg.context = Some(17);
        let mode = mode_by_name("window").unwrap();
        assert!(matches!(
            mode.prepare(&corpus, &model, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn distill_batches_carry_labels_for_every_mask() {
        let words = [
            "birds sing in the morning",
            "dogs bark in the night",
            "cats sleep in the sun",
            "fish swim in the river",
            "birds fly to the river",
            "dogs run in the sun",
            "cats hunt in the night",
            "fish rest in the weeds",
        ];
        let text: Vec<Vec<String>> = words
            .iter()
            .map(|s| s.split(' ').map(str::to_string).collect())
            .collect();
        let vocab = Vocabulary::build(&text);
        let corpus: Vec<Vec<u32>> = text
            .iter()
            .map(|s| s.iter().map(|w| vocab.id(w).unwrap()).collect())
            .collect();

        let mut model = toy_model();
        model.vocab = vocab.len();
        let mut cfg = TrainConfig::pretrain("distill", 4);
        cfg.lambda = 0.5;
        cfg.batch_size = 4;
        let mode = mode_by_name("distill").unwrap();
        let data = mode.prepare(&corpus, &model, &cfg).unwrap();
        let blocks = match &data {
            TrainData::Blocks(blocks) => blocks.clone(),
            TrainData::Windows(_) => panic!("distill prepares blocks"),
        };

        let counts = count(&corpus, 3).unwrap();
        let slm = estimate(&counts).unwrap();
        // Exhaustive plan: one keep-entry per eligible block position.
        let mut entries = Vec::new();
        for (b, block) in blocks.iter().enumerate() {
            for (pos, &id) in block.iter().enumerate() {
                if id >= NUM_SPECIALS as u32 {
                    entries.push(MaskEntry {
                        sentence: b,
                        position: pos,
                        action: MaskAction::Keep,
                        target: id,
                        replacement: None,
                    });
                }
            }
        }
        let plan = MaskPlan { entries };
        let labels = build_label_set(&slm, &blocks, &plan, &vocab, 6, 20).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch = mode
            .next_batch(&data, &cfg, vocab.len(), Some(&labels), &mut rng)
            .unwrap();
        match &batch.targets {
            BatchTargets::Soft(pairs) => {
                assert_eq!(pairs.len(), batch.masks.len());
                for (gold, label) in pairs {
                    assert!(*gold >= NUM_SPECIALS as u32);
                    label.validate().unwrap();
                }
            }
            BatchTargets::Hard(_) => panic!("distill batches must carry soft targets"),
        }
    }

    #[test]
    fn distill_without_labels_is_rejected() {
        let corpus = toy_corpus();
        let model = toy_model();
        let cfg = TrainConfig::pretrain("distill", 4);
        let mode = mode_by_name("distill").unwrap();
        let data = mode.prepare(&corpus, &model, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!(matches!(
            mode.next_batch(&data, &cfg, VOCAB, None, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn eval_shaping_matches_each_mode() {
        let tokens = vec![6, 7, MASK_ID, 9, 10];
        let cfg_base = TrainConfig::pretrain("baseline", 1);
        let baseline = mode_by_name("baseline").unwrap();
        let (shaped, pos) = baseline.shape_eval_input(&tokens, 2, &cfg_base).unwrap();
        assert_eq!(shaped, tokens);
        assert_eq!(pos, 2);

        let mut cfg_win = TrainConfig::pretrain("window", 1);
        cfg_win.context = Some(3);
        let window = mode_by_name("window").unwrap();
        let (shaped, pos) = window.shape_eval_input(&tokens, 0, &cfg_win).unwrap();
        assert_eq!(shaped, vec![crate::corpus::BOS_ID, MASK_ID, 7]);
        assert_eq!(pos, 1);
        let (shaped, pos) = window.shape_eval_input(&tokens, 4, &cfg_win).unwrap();
        assert_eq!(shaped, vec![9, MASK_ID, EOS_ID]);
        assert_eq!(pos, 1);
    }

    #[test]
    fn stream_blocks_pad_only_the_tail() {
        let corpus = toy_corpus();
        let model = toy_model();
        let cfg = TrainConfig::pretrain("baseline", 1);
        let mode = mode_by_name("baseline").unwrap();
        let data = mode.prepare(&corpus, &model, &cfg).unwrap();
        let blocks = match &data {
            TrainData::Blocks(blocks) => blocks,
            TrainData::Windows(_) => panic!("baseline prepares blocks"),
        };
        for block in blocks {
            assert_eq!(block.len(), model.max_seq);
        }
        let padded: Vec<_> = blocks
            .iter()
            .filter(|b| b.contains(&PAD_ID))
            .collect();
        assert!(padded.len() <= 1);
    }
}
