//! Named trainable parameters, stored outside the graph so tapes can be
//! rebuilt every step while values and gradients persist.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::scalar::Scalar;
use crate::numerics::tensor::Tensor;

/// One trainable tensor and its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Ordered collection of parameters with name lookup. Slot order is
/// insertion order, which keeps optimizer sweeps deterministic.
#[derive(Debug, Clone, Default)]
pub struct Params<T> {
    items: Vec<Parameter<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Params<T> {
    pub fn new() -> Self {
        Params {
            items: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, value: Tensor<T>) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter name {name:?}"
            )));
        }
        let grad = Tensor::zeros(value.shape());
        self.index.insert(name.to_string(), self.items.len());
        self.items.push(Parameter {
            name: name.to_string(),
            value,
            grad,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Parameter<T>> {
        self.slot(name).map(|s| &self.items[s])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter<T>> {
        let slot = self.slot(name)?;
        Some(&mut self.items[slot])
    }

    pub fn by_slot(&self, slot: usize) -> &Parameter<T> {
        &self.items[slot]
    }

    pub fn by_slot_mut(&mut self, slot: usize) -> &mut Parameter<T> {
        &mut self.items[slot]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.items.iter()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.items {
            p.grad.fill(T::ZERO);
        }
    }

    /// Total number of scalar coordinates across all parameter values.
    pub fn total_len(&self) -> usize {
        self.items.iter().map(|p| p.value.len()).sum()
    }

    /// Copies values into another precision. Gradients start at zero.
    pub fn convert<U: Scalar>(&self) -> Params<U> {
        let mut out = Params::new();
        for p in &self.items {
            out.add(&p.name, p.value.convert()).expect("names are unique");
        }
        out
    }
}
