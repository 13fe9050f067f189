//! Weight layout and initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::numerics::{Params, Scalar, Tensor};
use crate::transformer::config::ModelConfig;

const INIT_STD: f64 = 0.02;

/// Model weights. The MLM output projection is the token embedding table
/// itself (tied), so no separate output matrix exists.
#[derive(Debug, Clone)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub params: Params<T>,
}

/// Every named tensor the encoder and MLM head require, with its shape.
/// Task heads (`head.*`) are added later by fine-tuning and are not listed.
pub fn expected_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.dim;
    let dk = config.head_dim();
    let mut shapes = vec![
        ("emb.tok".to_string(), vec![config.vocab, d]),
        ("emb.pos".to_string(), vec![config.max_seq, d]),
        ("emb.ln.g".to_string(), vec![d]),
        ("emb.ln.b".to_string(), vec![d]),
    ];
    for layer in 0..config.layers {
        for head in 0..config.heads {
            for proj in ["q", "k", "v"] {
                shapes.push((format!("enc.{layer}.attn.{proj}.{head}.w"), vec![d, dk]));
                shapes.push((format!("enc.{layer}.attn.{proj}.{head}.b"), vec![dk]));
            }
            shapes.push((format!("enc.{layer}.attn.o.{head}.w"), vec![dk, d]));
        }
        shapes.push((format!("enc.{layer}.attn.o.b"), vec![d]));
        shapes.push((format!("enc.{layer}.ln1.g"), vec![d]));
        shapes.push((format!("enc.{layer}.ln1.b"), vec![d]));
        shapes.push((format!("enc.{layer}.ffn.1.w"), vec![d, config.ffn_dim]));
        shapes.push((format!("enc.{layer}.ffn.1.b"), vec![config.ffn_dim]));
        shapes.push((format!("enc.{layer}.ffn.2.w"), vec![config.ffn_dim, d]));
        shapes.push((format!("enc.{layer}.ffn.2.b"), vec![d]));
        shapes.push((format!("enc.{layer}.ln2.g"), vec![d]));
        shapes.push((format!("enc.{layer}.ln2.b"), vec![d]));
    }
    shapes.push(("mlm.b".to_string(), vec![config.vocab]));
    shapes
}

impl<T: Scalar> ModelParams<T> {
    /// Gaussian init for weights and embeddings, ones for layer-norm gains,
    /// zeros for biases. Deterministic in the seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid distribution");
        let mut params = Params::new();
        for (name, shape) in expected_shapes(config) {
            let tensor = if name.ends_with(".g") {
                Tensor::filled(&shape, T::ONE)
            } else if name.ends_with(".b") {
                Tensor::zeros(&shape)
            } else {
                let len: usize = shape.iter().product();
                let data: Vec<T> = (0..len)
                    .map(|_| T::from_f64(normal.sample(&mut rng)))
                    .collect();
                Tensor::from_vec(&shape, data)?
            };
            params.add(&name, tensor)?;
        }
        Ok(ModelParams {
            config: config.clone(),
            params,
        })
    }

    pub fn convert<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config.clone(),
            params: self.params.convert(),
        }
    }
}
