//! Finite-difference validation of backpropagated gradients.

use rand::Rng;

use crate::numerics::params::Params;

/// Compares analytic gradients, already accumulated in `params`, against
/// central finite differences of `f`. Checks `samples` randomly chosen
/// coordinates (all of them when the total count is smaller) and returns the
/// largest relative error observed.
///
/// `f` must be a deterministic function of the parameter values: run any
/// stochastic pieces (dropout, masking choices) with fixed decisions.
pub fn grad_check<F>(
    mut f: F,
    params: &mut Params<f64>,
    eps: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> f64
where
    F: FnMut(&Params<f64>) -> f64,
{
    let total = params.total_len();
    let picked: Vec<usize> = if total <= samples {
        (0..total).collect()
    } else {
        rand::seq::index::sample(rng, total, samples).into_vec()
    };
    let mut worst = 0.0f64;
    for flat in picked {
        let (slot, offset) = locate(params, flat);
        let original = params.by_slot(slot).value.data()[offset];
        params.by_slot_mut(slot).value.data_mut()[offset] = original + eps;
        let plus = f(params);
        params.by_slot_mut(slot).value.data_mut()[offset] = original - eps;
        let minus = f(params);
        params.by_slot_mut(slot).value.data_mut()[offset] = original;
        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = params.by_slot(slot).grad.data()[offset];
        let scale = analytic.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

fn locate(params: &Params<f64>, flat: usize) -> (usize, usize) {
    let mut offset = flat;
    for slot in 0..params.len() {
        let len = params.by_slot(slot).value.len();
        if offset < len {
            return (slot, offset);
        }
        offset -= len;
    }
    panic!("flat index {flat} out of range");
}
