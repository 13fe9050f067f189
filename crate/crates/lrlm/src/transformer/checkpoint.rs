//! Binary checkpoints: magic, version, config, then named f32 tensors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Params, Tensor};
use crate::transformer::config::ModelConfig;
use crate::transformer::params::{expected_shapes, ModelParams};

const MAGIC: &[u8; 4] = b"LRLM";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, model: &ModelParams<f32>) -> Result<()> {
    let file = File::create(path)?;
    let mut sink = BufWriter::new(file);
    write_checkpoint(model, &mut sink)?;
    sink.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams<f32>> {
    let file = File::open(path)?;
    read_checkpoint(&mut BufReader::new(file))
}

pub fn write_checkpoint<W: Write>(model: &ModelParams<f32>, sink: &mut W) -> Result<()> {
    sink.write_all(MAGIC)?;
    sink.write_all(&VERSION.to_le_bytes())?;
    let c = &model.config;
    for field in [c.layers, c.heads, c.dim, c.ffn_dim, c.max_seq, c.vocab] {
        sink.write_all(&(field as u32).to_le_bytes())?;
    }
    sink.write_all(&c.dropout.to_le_bytes())?;
    match c.half_width {
        Some(h) => {
            sink.write_all(&[1])?;
            sink.write_all(&(h as u32).to_le_bytes())?;
        }
        None => {
            sink.write_all(&[0])?;
            sink.write_all(&0u32.to_le_bytes())?;
        }
    }
    sink.write_all(&(model.params.len() as u32).to_le_bytes())?;
    for p in model.params.iter() {
        let name = p.name.as_bytes();
        sink.write_all(&(name.len() as u32).to_le_bytes())?;
        sink.write_all(name)?;
        sink.write_all(&(p.value.shape().len() as u32).to_le_bytes())?;
        for &dim in p.value.shape() {
            sink.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in p.value.data() {
            sink.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(source: &mut R) -> Result<ModelParams<f32>> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {magic:?}, not a model checkpoint"
        )));
    }
    let version = read_u32(source)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let layers = read_u32(source)? as usize;
    let heads = read_u32(source)? as usize;
    let dim = read_u32(source)? as usize;
    let ffn_dim = read_u32(source)? as usize;
    let max_seq = read_u32(source)? as usize;
    let vocab = read_u32(source)? as usize;
    let mut dropout_bytes = [0u8; 8];
    source.read_exact(&mut dropout_bytes)?;
    let dropout = f64::from_le_bytes(dropout_bytes);
    let mut flag = [0u8; 1];
    source.read_exact(&mut flag)?;
    let half_width_value = read_u32(source)? as usize;
    let config = ModelConfig {
        layers,
        heads,
        dim,
        ffn_dim,
        max_seq,
        dropout,
        half_width: (flag[0] == 1).then_some(half_width_value),
        vocab,
    };
    config.validate()?;

    let expected: std::collections::HashMap<String, Vec<usize>> =
        expected_shapes(&config).into_iter().collect();
    let n_tensors = read_u32(source)? as usize;
    let mut params = Params::new();
    for _ in 0..n_tensors {
        let name_len = read_u32(source)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        source.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".to_string()))?;
        let ndim = read_u32(source)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u32(source)? as usize);
        }
        validate_shape(&name, &shape, &expected, &config)?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 4];
        for _ in 0..len {
            source.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf));
        }
        params
            .add(&name, Tensor::from_vec(&shape, data)?)
            .map_err(|_| Error::Checkpoint(format!("duplicate tensor {name:?}")))?;
    }
    for name in expected.keys() {
        if params.get(name).is_none() {
            return Err(Error::Checkpoint(format!("missing tensor {name:?}")));
        }
    }
    Ok(ModelParams { config, params })
}

fn validate_shape(
    name: &str,
    shape: &[usize],
    expected: &std::collections::HashMap<String, Vec<usize>>,
    config: &ModelConfig,
) -> Result<()> {
    if let Some(want) = expected.get(name) {
        if shape != &want[..] {
            return Err(Error::Checkpoint(format!(
                "tensor {name:?} has shape {shape:?}, expected {want:?}"
            )));
        }
        return Ok(());
    }
    if name.starts_with("head.") && name.ends_with(".w") {
        if shape.len() != 2 || shape[0] != config.dim {
            return Err(Error::Checkpoint(format!(
                "head tensor {name:?} has shape {shape:?}, expected [{}, *]",
                config.dim
            )));
        }
        return Ok(());
    }
    if name.starts_with("head.") && name.ends_with(".b") {
        if shape.len() != 1 {
            return Err(Error::Checkpoint(format!(
                "head bias {name:?} has shape {shape:?}, expected a vector"
            )));
        }
        return Ok(());
    }
    Err(Error::Checkpoint(format!("unexpected tensor {name:?}")))
}

fn read_u32<R: Read>(source: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    source.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
