//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::numerics::params::Params;
use crate::numerics::scalar::Scalar;
use crate::numerics::tensor::Tensor;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First and second moment estimates for one parameter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    pub t: u64,
}

/// Optimizer over a [`Params`] container. States are allocated on the first
/// step and keyed by parameter slot, so the container must keep its layout.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            states: Vec::new(),
        }
    }

    pub fn state(&self, slot: usize) -> Option<&AdamState<T>> {
        self.states.get(slot)
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// A non-finite gradient anywhere aborts before touching any value.
    pub fn step(&mut self, params: &mut Params<T>) -> Result<()> {
        if self.states.is_empty() {
            self.states = params
                .iter()
                .map(|p| AdamState {
                    m: Tensor::zeros(p.value.shape()),
                    v: Tensor::zeros(p.value.shape()),
                    t: 0,
                })
                .collect();
        }
        if self.states.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "optimizer tracks {} parameters but container has {}",
                self.states.len(),
                params.len()
            )));
        }
        for p in params.iter() {
            if p.grad.data().iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient(p.name.clone()));
            }
        }

        let b1 = T::from_f64(BETA1);
        let b2 = T::from_f64(BETA2);
        let one_minus_b1 = T::from_f64(1.0 - BETA1);
        let one_minus_b2 = T::from_f64(1.0 - BETA2);
        let eps = T::from_f64(EPS);
        for slot in 0..params.len() {
            let state = &mut self.states[slot];
            state.t += 1;
            let corr1 = T::from_f64(1.0 / (1.0 - BETA1.powi(state.t as i32)));
            let corr2 = T::from_f64(1.0 / (1.0 - BETA2.powi(state.t as i32)));
            let lr = T::from_f64(self.lr);
            let p = params.by_slot_mut(slot);
            for i in 0..p.value.len() {
                let g = p.grad.data()[i];
                let m = b1 * state.m.data()[i] + one_minus_b1 * g;
                let v = b2 * state.v.data()[i] + one_minus_b2 * g * g;
                state.m.data_mut()[i] = m;
                state.v.data_mut()[i] = v;
                let m_hat = m * corr1;
                let v_hat = v * corr2;
                p.value.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.fill(T::ZERO);
        }
        Ok(())
    }
}
