//! Forward passes: banded multi-head attention, encoder stack, MLM head,
//! and sequence pooling for fine-tuned tasks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Params, Scalar, Tape, Tensor, Var};
use crate::transformer::config::ModelConfig;

/// Additive penalty for banned attention positions. Kept finite so the
/// softmax never sees an actual infinity.
pub const BAND_PENALTY: f64 = -1e9;

/// Additive attention mask: 0 inside the band `|i - j| <= half_width`,
/// [`BAND_PENALTY`] outside it.
pub fn band_mask<T: Scalar>(len: usize, half_width: usize) -> Tensor<T> {
    let penalty = T::from_f64(BAND_PENALTY);
    let mut mask = Tensor::zeros(&[len, len]);
    for i in 0..len {
        for j in 0..len {
            if i.abs_diff(j) > half_width {
                mask.data_mut()[i * len + j] = penalty;
            }
        }
    }
    mask
}

/// Combined additive mask for a sequence: the optional attention band plus
/// a [`BAND_PENALTY`] column for every padding position. `None` when nothing
/// is masked, so full attention skips the add entirely.
pub fn additive_mask<T: Scalar>(
    len: usize,
    half_width: Option<usize>,
    pad: &[bool],
) -> Option<Tensor<T>> {
    let any_pad = pad.iter().any(|&p| p);
    if half_width.is_none() && !any_pad {
        return None;
    }
    let mut mask = match half_width {
        Some(h) => band_mask(len, h),
        None => Tensor::zeros(&[len, len]),
    };
    let penalty = T::from_f64(BAND_PENALTY);
    for (j, &p) in pad.iter().enumerate() {
        if p {
            for i in 0..len {
                mask.data_mut()[i * len + j] = penalty;
            }
        }
    }
    Some(mask)
}

/// Scaled dot-product attention for one head. Returns the context rows and
/// the attention probabilities.
pub fn attention<T: Scalar>(
    tape: &Tape<T>,
    q: Var,
    k: Var,
    v: Var,
    mask: Option<&Tensor<T>>,
    head_dim: usize,
) -> Result<(Var, Var)> {
    let scores = tape.matmul_bt(q, k)?;
    let mut scaled = tape.scale(scores, 1.0 / (head_dim as f64).sqrt());
    if let Some(m) = mask {
        let m = tape.leaf(m.clone());
        scaled = tape.add(scaled, m)?;
    }
    let probs = tape.softmax_rows(scaled)?;
    let ctx = tape.matmul(probs, v)?;
    Ok((ctx, probs))
}

fn linear<T: Scalar>(tape: &Tape<T>, params: &Params<T>, x: Var, prefix: &str) -> Result<Var> {
    let w = tape.param(params, &format!("{prefix}.w"))?;
    let b = tape.param(params, &format!("{prefix}.b"))?;
    let y = tape.matmul(x, w)?;
    tape.add_rows(y, b)
}

fn layer_norm_named<T: Scalar>(
    tape: &Tape<T>,
    params: &Params<T>,
    x: Var,
    prefix: &str,
) -> Result<Var> {
    let g = tape.param(params, &format!("{prefix}.g"))?;
    let b = tape.param(params, &format!("{prefix}.b"))?;
    tape.layer_norm(x, g, b)
}

fn maybe_dropout<T: Scalar, R: Rng>(
    tape: &Tape<T>,
    x: Var,
    config: &ModelConfig,
    train_mode: bool,
    rng: &mut R,
) -> Result<Var> {
    if train_mode && config.dropout > 0.0 {
        tape.dropout(x, config.dropout, rng)
    } else {
        Ok(x)
    }
}

/// Runs the encoder over one sequence: token plus learned position
/// embeddings, a layer norm, then `layers` post-norm blocks of multi-head
/// attention and a GELU feed-forward. Dropout fires only in `train_mode`.
pub fn encoder_forward<T: Scalar, R: Rng>(
    tape: &Tape<T>,
    config: &ModelConfig,
    params: &Params<T>,
    tokens: &[u32],
    pad: &[bool],
    train_mode: bool,
    rng: &mut R,
) -> Result<Var> {
    let len = tokens.len();
    if len == 0 {
        return Err(Error::InvalidArgument(
            "cannot encode an empty sequence".to_string(),
        ));
    }
    if len > config.max_seq {
        return Err(Error::SequenceTooLong {
            len,
            max: config.max_seq,
        });
    }
    if pad.len() != len {
        return Err(Error::ShapeMismatch {
            op: "encoder_forward",
            details: format!("{} tokens but {} pad flags", len, pad.len()),
        });
    }
    if let Some(&bad) = tokens.iter().find(|&&t| (t as usize) >= config.vocab) {
        return Err(Error::InvalidArgument(format!(
            "token id {bad} is outside the vocabulary of {}",
            config.vocab
        )));
    }

    let tok_table = tape.param(params, "emb.tok")?;
    let pos_table = tape.param(params, "emb.pos")?;
    let tok_e = tape.embedding_lookup(tok_table, tokens)?;
    let positions: Vec<u32> = (0..len as u32).collect();
    let pos_e = tape.embedding_lookup(pos_table, &positions)?;
    let summed = tape.add(tok_e, pos_e)?;
    let mut h = layer_norm_named(tape, params, summed, "emb.ln")?;
    h = maybe_dropout(tape, h, config, train_mode, rng)?;

    let mask = additive_mask::<T>(len, config.half_width, pad);

    for layer in 0..config.layers {
        let mut heads: Option<Var> = None;
        for head in 0..config.heads {
            let q = linear(tape, params, h, &format!("enc.{layer}.attn.q.{head}"))?;
            let k = linear(tape, params, h, &format!("enc.{layer}.attn.k.{head}"))?;
            let v = linear(tape, params, h, &format!("enc.{layer}.attn.v.{head}"))?;
            let (ctx, _) = attention(tape, q, k, v, mask.as_ref(), config.head_dim())?;
            let wo = tape.param(params, &format!("enc.{layer}.attn.o.{head}.w"))?;
            let projected = tape.matmul(ctx, wo)?;
            heads = Some(match heads {
                Some(acc) => tape.add(acc, projected)?,
                None => projected,
            });
        }
        let mut attn = heads.expect("config.validate ensures at least one head");
        let ob = tape.param(params, &format!("enc.{layer}.attn.o.b"))?;
        attn = tape.add_rows(attn, ob)?;
        attn = maybe_dropout(tape, attn, config, train_mode, rng)?;
        let res = tape.add(h, attn)?;
        h = layer_norm_named(tape, params, res, &format!("enc.{layer}.ln1"))?;

        let f1 = linear(tape, params, h, &format!("enc.{layer}.ffn.1"))?;
        let act = tape.gelu(f1);
        let mut f2 = linear(tape, params, act, &format!("enc.{layer}.ffn.2"))?;
        f2 = maybe_dropout(tape, f2, config, train_mode, rng)?;
        let res = tape.add(h, f2)?;
        h = layer_norm_named(tape, params, res, &format!("enc.{layer}.ln2"))?;
    }
    Ok(h)
}

/// Logits for the selected positions through the tied output projection:
/// `hidden[pos] * E^T + bias`.
pub fn mlm_logits<T: Scalar>(
    tape: &Tape<T>,
    params: &Params<T>,
    hidden: Var,
    positions: &[usize],
) -> Result<Var> {
    let picked = tape.gather_rows(hidden, positions)?;
    let emb = tape.param(params, "emb.tok")?;
    let logits = tape.matmul_bt(picked, emb)?;
    let bias = tape.param(params, "mlm.b")?;
    tape.add_rows(logits, bias)
}

/// Full masked-language-model loss for one sequence: encoder, tied head at
/// the given positions, and cross entropy against `targets` (one row per
/// position; hard targets are one-hot rows).
#[allow(clippy::too_many_arguments)]
pub fn mlm_loss<T: Scalar, R: Rng>(
    tape: &Tape<T>,
    config: &ModelConfig,
    params: &Params<T>,
    tokens: &[u32],
    pad: &[bool],
    positions: &[usize],
    targets: &Tensor<T>,
    train_mode: bool,
    rng: &mut R,
) -> Result<Var> {
    let hidden = encoder_forward(tape, config, params, tokens, pad, train_mode, rng)?;
    let logits = mlm_logits(tape, params, hidden, positions)?;
    let q = tape.leaf(targets.clone());
    tape.cross_entropy(logits, q)
}

/// How fine-tuned tasks reduce a sequence to one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    First,
    Mean,
}

impl std::str::FromStr for PoolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(PoolMode::First),
            "mean" => Ok(PoolMode::Mean),
            other => Err(Error::InvalidArgument(format!(
                "unknown pool mode {other:?}; expected \"first\" or \"mean\""
            ))),
        }
    }
}

/// Reduces hidden states to a single row: the first position, or the mean
/// over non-padding positions.
pub fn pool<T: Scalar>(tape: &Tape<T>, hidden: Var, mode: PoolMode, pad: &[bool]) -> Result<Var> {
    match mode {
        PoolMode::First => tape.gather_rows(hidden, &[0]),
        PoolMode::Mean => {
            let kept = pad.iter().filter(|&&p| !p).count();
            if kept == 0 {
                return Err(Error::InvalidArgument(
                    "cannot pool a fully padded sequence".to_string(),
                ));
            }
            let w = T::from_f64(1.0 / kept as f64);
            let weights: Vec<T> = pad.iter().map(|&p| if p { T::ZERO } else { w }).collect();
            let row = tape.leaf(Tensor::from_vec(&[1, pad.len()], weights)?);
            tape.matmul(row, hidden)
        }
    }
}

/// Which input positions can influence each output position after `layers`
/// rounds of attention banded at `half_width`, via boolean reachability.
pub fn attention_reach(layers: usize, half_width: usize, len: usize) -> Vec<Vec<bool>> {
    let adj: Vec<Vec<bool>> = (0..len)
        .map(|i| (0..len).map(|j| i.abs_diff(j) <= half_width).collect())
        .collect();
    let mut reach: Vec<Vec<bool>> = (0..len).map(|i| (0..len).map(|j| i == j).collect()).collect();
    for _ in 0..layers {
        let mut next = vec![vec![false; len]; len];
        for i in 0..len {
            for k in 0..len {
                if adj[i][k] {
                    for j in 0..len {
                        next[i][j] |= reach[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::numerics::grad_check;
    use crate::transformer::params::ModelParams;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            layers: 1,
            heads: 2,
            dim: 8,
            ffn_dim: 16,
            max_seq: 8,
            dropout: 0.0,
            half_width: None,
            vocab: 30,
        }
    }

    #[test]
    fn band_mask_with_wide_band_is_all_zero() {
        let mask = band_mask::<f64>(5, 4);
        assert!(mask.data().iter().all(|&v| v == 0.0));
        let wider = band_mask::<f64>(5, 100);
        assert!(wider.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn band_mask_matches_half_width_reading() {
        let mask = band_mask::<f64>(7, 2);
        assert_eq!(mask.at(0, 3), BAND_PENALTY);
        assert_eq!(mask.at(0, 2), 0.0);
        assert_eq!(mask.at(6, 4), 0.0);
        assert_eq!(mask.at(6, 3), BAND_PENALTY);
    }

    #[test]
    fn zero_half_width_keeps_only_the_diagonal() {
        let mask = band_mask::<f64>(4, 0);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.0 } else { BAND_PENALTY };
                assert_eq!(mask.at(i, j), expected, "({i}, {j})");
            }
        }
    }

    #[test]
    fn additive_mask_is_none_without_band_or_padding() {
        assert!(additive_mask::<f64>(4, None, &[false; 4]).is_none());
        assert!(additive_mask::<f64>(4, Some(1), &[false; 4]).is_some());
        assert!(additive_mask::<f64>(4, None, &[false, false, false, true]).is_some());
    }

    #[test]
    fn additive_mask_penalizes_padding_columns() {
        let mask = additive_mask::<f64>(3, None, &[false, false, true]).unwrap();
        for i in 0..3 {
            assert_eq!(mask.at(i, 2), BAND_PENALTY);
            assert_eq!(mask.at(i, 0), 0.0);
        }
    }

    #[test]
    fn identical_keys_average_the_values() {
        let tape = Tape::new();
        let q = tape.leaf(Tensor::from_vec(&[3, 2], vec![0.3, -1.0, 2.0, 0.5, 0.0, 0.0]).unwrap());
        let k = tape.leaf(Tensor::from_vec(&[3, 2], vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap());
        let v = tape.leaf(Tensor::from_vec(&[3, 2], vec![3.0, 0.0, 0.0, 6.0, 3.0, 3.0]).unwrap());
        let (ctx, probs) = attention(&tape, q, k, v, None, 2).unwrap();
        let got = tape.value(ctx);
        for r in 0..3 {
            assert_relative_eq!(got.at(r, 0), 2.0, epsilon = 1e-12);
            assert_relative_eq!(got.at(r, 1), 3.0, epsilon = 1e-12);
        }
        let p = tape.value(probs);
        for r in 0..3 {
            for c in 0..3 {
                assert_relative_eq!(p.at(r, c), 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_mask_reproduces_unmasked_attention() {
        let tape = Tape::new();
        let data: Vec<f64> = (0..8).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let q = tape.leaf(Tensor::from_vec(&[4, 2], data.clone()).unwrap());
        let k = tape.leaf(Tensor::from_vec(&[4, 2], data.iter().map(|v| v * 0.7).collect()).unwrap());
        let v = tape.leaf(Tensor::from_vec(&[4, 2], data.iter().map(|v| v + 2.0).collect()).unwrap());
        let (plain, _) = attention(&tape, q, k, v, None, 2).unwrap();
        let zeros = Tensor::zeros(&[4, 4]);
        let (masked, _) = attention(&tape, q, k, v, Some(&zeros), 2).unwrap();
        assert_eq!(tape.value(plain), tape.value(masked));
    }

    #[test]
    fn banned_positions_get_negligible_weight() {
        let tape = Tape::new();
        let data: Vec<f64> = (0..8).map(|i| (i as f64) * 0.1).collect();
        let q = tape.leaf(Tensor::from_vec(&[4, 2], data.clone()).unwrap());
        let k = tape.leaf(Tensor::from_vec(&[4, 2], data.clone()).unwrap());
        let v = tape.leaf(Tensor::from_vec(&[4, 2], data).unwrap());
        let mask = band_mask::<f64>(4, 1);
        let (_, probs) = attention(&tape, q, k, v, Some(&mask), 2).unwrap();
        let p = tape.value(probs);
        assert!(p.at(0, 2) < 1e-30);
        assert!(p.at(0, 3) < 1e-30);
        for r in 0..4 {
            let total: f64 = p.row(r).iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn attention_ignores_padding_columns() {
        let tape = Tape::new();
        let q = tape.leaf(Tensor::from_vec(&[4, 2], vec![0.1; 8]).unwrap());
        let k = tape.leaf(Tensor::from_vec(&[4, 2], vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap());
        let v = tape.leaf(
            Tensor::from_vec(&[4, 2], vec![3.0, 0.0, 0.0, 6.0, 3.0, 3.0, 100.0, 100.0]).unwrap(),
        );
        let mask = additive_mask::<f64>(4, None, &[false, false, false, true]).unwrap();
        let (ctx, _) = attention(&tape, q, k, v, Some(&mask), 2).unwrap();
        let got = tape.value(ctx);
        for r in 0..4 {
            assert_relative_eq!(got.at(r, 0), 2.0, epsilon = 1e-10);
            assert_relative_eq!(got.at(r, 1), 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_layer_encoder_is_the_normalized_embedding() {
        let mut config = tiny_config();
        config.layers = 0;
        let model = ModelParams::<f64>::init(&config, 3).unwrap();
        let tokens = [5u32, 6, 7];
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let tape = Tape::new();
        let out = encoder_forward(
            &tape,
            &config,
            &model.params,
            &tokens,
            &[false; 3],
            false,
            &mut rng,
        )
        .unwrap();

        let expect_tape = Tape::new();
        let tok = expect_tape.param(&model.params, "emb.tok").unwrap();
        let pos = expect_tape.param(&model.params, "emb.pos").unwrap();
        let te = expect_tape.embedding_lookup(tok, &tokens).unwrap();
        let pe = expect_tape.embedding_lookup(pos, &[0, 1, 2]).unwrap();
        let sum = expect_tape.add(te, pe).unwrap();
        let g = expect_tape.param(&model.params, "emb.ln.g").unwrap();
        let b = expect_tape.param(&model.params, "emb.ln.b").unwrap();
        let normed = expect_tape.layer_norm(sum, g, b).unwrap();

        assert_eq!(tape.value(out), expect_tape.value(normed));
    }

    #[test]
    fn overlong_sequences_are_rejected() {
        let config = tiny_config();
        let model = ModelParams::<f64>::init(&config, 3).unwrap();
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tokens = vec![5u32; config.max_seq + 1];
        let pad = vec![false; tokens.len()];
        let err = encoder_forward(&tape, &config, &model.params, &tokens, &pad, false, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::SequenceTooLong { len: 9, max: 8 }), "{err}");
    }

    #[test]
    fn out_of_vocabulary_tokens_are_rejected() {
        let config = tiny_config();
        let model = ModelParams::<f64>::init(&config, 3).unwrap();
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = encoder_forward(
            &tape,
            &config,
            &model.params,
            &[5, 30],
            &[false; 2],
            false,
            &mut rng,
        )
        .unwrap_err();
        assert!(err.to_string().contains("vocabulary"), "{err}");
    }

    #[test]
    fn full_attention_equals_maximal_band() {
        let config_full = tiny_config();
        let mut config_band = tiny_config();
        config_band.half_width = Some(config_band.max_seq - 1);
        let model = ModelParams::<f64>::init(&config_full, 9).unwrap();
        let tokens = [4u32, 9, 14, 19, 24];
        let pad = [false; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let tape_a = Tape::new();
        let out_a = encoder_forward(&tape_a, &config_full, &model.params, &tokens, &pad, false, &mut rng).unwrap();
        let tape_b = Tape::new();
        let out_b = encoder_forward(&tape_b, &config_band, &model.params, &tokens, &pad, false, &mut rng).unwrap();
        assert_eq!(tape_a.value(out_a), tape_b.value(out_b));
    }

    #[test]
    fn finite_difference_jacobian_vanishes_outside_the_band() {
        let mut config = tiny_config();
        config.half_width = Some(1);
        let model = ModelParams::<f64>::init(&config, 5).unwrap();
        let len = config.max_seq;
        // Distinct token per position so an embedding row maps to exactly
        // one input position.
        let tokens: Vec<u32> = (6..6 + len as u32).collect();
        let pad = vec![false; len];
        let eps = 1e-4;

        let forward = |params: &Params<f64>| -> Tensor<f64> {
            let tape = Tape::new();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let out = encoder_forward(&tape, &config, params, &tokens, &pad, false, &mut rng)
                .unwrap();
            tape.value(out)
        };

        let mut params = model.params.clone();
        let emb_cols = config.dim;
        for (j, &token) in tokens.iter().enumerate() {
            let flat = (token as usize) * emb_cols;
            let original = params.get("emb.tok").unwrap().value.data()[flat];
            params.get_mut("emb.tok").unwrap().value.data_mut()[flat] = original + eps;
            let plus = forward(&params);
            params.get_mut("emb.tok").unwrap().value.data_mut()[flat] = original - eps;
            let minus = forward(&params);
            params.get_mut("emb.tok").unwrap().value.data_mut()[flat] = original;
            for i in 0..len {
                let influence: f64 = plus
                    .row(i)
                    .iter()
                    .zip(minus.row(i))
                    .map(|(p, m)| ((p - m) / (2.0 * eps)).abs())
                    .sum();
                if i.abs_diff(j) > config.layers * config.half_width.unwrap() {
                    assert!(
                        influence < 1e-8,
                        "position {j} leaked into {i}: {influence}"
                    );
                } else if i == j {
                    assert!(influence > 1e-6, "no self influence at {i}");
                }
            }
        }
    }

    #[test]
    fn reach_grows_by_half_width_per_layer() {
        let reach = attention_reach(6, 2, 20);
        let count0 = reach[0].iter().filter(|&&b| b).count();
        assert_eq!(count0, 13);
        assert!(reach[0][12]);
        assert!(!reach[0][13]);

        let two = attention_reach(2, 2, 20);
        assert_eq!(two[0].iter().filter(|&&b| b).count(), 5);
        let one = attention_reach(1, 1, 20);
        assert_eq!(one[10].iter().filter(|&&b| b).count(), 3);
        assert!(one[10][9] && one[10][10] && one[10][11]);
    }

    #[test]
    fn zero_hidden_rows_give_bias_logits() {
        let config = tiny_config();
        let mut model = ModelParams::<f64>::init(&config, 3).unwrap();
        let bias: Vec<f64> = (0..config.vocab).map(|i| i as f64 * 0.1).collect();
        model.params.get_mut("mlm.b").unwrap().value =
            Tensor::from_vec(&[config.vocab], bias.clone()).unwrap();

        let tape = Tape::new();
        let hidden = tape.leaf(Tensor::zeros(&[3, config.dim]));
        let logits = mlm_logits(&tape, &model.params, hidden, &[0, 2]).unwrap();
        let got = tape.value(logits);
        assert_eq!(got.shape(), &[2, config.vocab]);
        for r in 0..2 {
            assert_eq!(got.row(r), &bias[..]);
        }
    }

    #[test]
    fn tied_embedding_gradients_flow_from_both_paths() {
        let config = tiny_config();
        let model = ModelParams::<f64>::init(&config, 3).unwrap();
        let mut params = model.params;
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Target token 9 never appears in the input, so its embedding row
        // only receives gradient through the output projection.
        let tokens = [7u32, 8];
        let mut targets = Tensor::zeros(&[1, config.vocab]);
        targets.data_mut()[9] = 1.0;
        let loss = mlm_loss(
            &tape,
            &config,
            &params,
            &tokens,
            &[false; 2],
            &[0],
            &targets,
            false,
            &mut rng,
        )
        .unwrap();
        tape.backward(loss, &mut params).unwrap();
        let grad = &params.get("emb.tok").unwrap().grad;
        let row_norm = |row: usize| grad.row(row).iter().map(|v| v.abs()).sum::<f64>();
        assert!(row_norm(9) > 1e-9, "output-path gradient missing");
        assert!(row_norm(7) > 1e-9, "input-path gradient missing");
    }

    #[test]
    fn mlm_loss_gradients_match_finite_differences() {
        let config = tiny_config();
        let model = ModelParams::<f64>::init(&config, 13).unwrap();
        let mut params = model.params;
        let tokens = [3u32, 11, 2, 27];
        let pad = [false; 4];
        let positions = [2usize];
        let mut targets = Tensor::zeros(&[1, config.vocab]);
        targets.data_mut()[11] = 1.0;

        let loss_fn = |p: &Params<f64>| {
            let tape = Tape::new();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let loss = mlm_loss(&tape, &config, p, &tokens, &pad, &positions, &targets, false, &mut rng)
                .unwrap();
            tape.scalar_value(loss)
        };
        {
            let tape = Tape::new();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let loss = mlm_loss(
                &tape, &config, &params, &tokens, &pad, &positions, &targets, false, &mut rng,
            )
            .unwrap();
            tape.backward(loss, &mut params).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let err = grad_check(loss_fn, &mut params, 1e-4, 200, &mut rng);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn pool_first_equals_mean_for_single_tokens() {
        let tape = Tape::new();
        let hidden = tape.leaf(Tensor::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap());
        let first = pool(&tape, hidden, PoolMode::First, &[false]).unwrap();
        let mean = pool(&tape, hidden, PoolMode::Mean, &[false]).unwrap();
        assert_eq!(tape.value(first), tape.value(mean));
    }

    #[test]
    fn mean_pool_averages_rows() {
        let tape = Tape::new();
        let hidden = tape.leaf(Tensor::from_vec(&[2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap());
        let mean = pool(&tape, hidden, PoolMode::Mean, &[false, false]).unwrap();
        let got = tape.value(mean);
        assert_relative_eq!(got.data()[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(got.data()[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_pool_skips_padding() {
        let tape = Tape::new();
        let hidden = tape.leaf(Tensor::from_vec(&[3, 1], vec![2.0, 4.0, 100.0]).unwrap());
        let mean = pool(&tape, hidden, PoolMode::Mean, &[false, false, true]).unwrap();
        assert_relative_eq!(tape.value(mean).data()[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pooling_all_padding_is_an_error() {
        let tape = Tape::<f64>::new();
        let hidden = tape.leaf(Tensor::zeros(&[2, 2]));
        let err = pool(&tape, hidden, PoolMode::Mean, &[true, true]).unwrap_err();
        assert!(err.to_string().contains("pool"), "{err}");
    }

    #[test]
    fn pool_mode_parses_from_str() {
        assert_eq!("first".parse::<PoolMode>().unwrap(), PoolMode::First);
        assert_eq!("mean".parse::<PoolMode>().unwrap(), PoolMode::Mean);
        assert!("max".parse::<PoolMode>().is_err());
    }

    #[test]
    fn eval_mode_ignores_the_rng() {
        let mut config = tiny_config();
        config.dropout = 0.5;
        let model = ModelParams::<f64>::init(&config, 3).unwrap();
        let tokens = [5u32, 6, 7];
        let pad = [false; 3];

        let tape_a = Tape::new();
        let mut rng_a = ChaCha8Rng::seed_from_u64(1);
        let a = encoder_forward(&tape_a, &config, &model.params, &tokens, &pad, false, &mut rng_a).unwrap();
        let tape_b = Tape::new();
        let mut rng_b = ChaCha8Rng::seed_from_u64(999);
        let b = encoder_forward(&tape_b, &config, &model.params, &tokens, &pad, false, &mut rng_b).unwrap();
        assert_eq!(tape_a.value(a), tape_b.value(b));

        let tape_c = Tape::new();
        let mut rng_c = ChaCha8Rng::seed_from_u64(1);
        let c = encoder_forward(&tape_c, &config, &model.params, &tokens, &pad, true, &mut rng_c).unwrap();
        let tape_d = Tape::new();
        let mut rng_d = ChaCha8Rng::seed_from_u64(999);
        let d = encoder_forward(&tape_d, &config, &model.params, &tokens, &pad, true, &mut rng_d).unwrap();
        assert_ne!(tape_c.value(c), tape_d.value(d));
    }
}
