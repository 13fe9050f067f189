//! Reverse-mode automatic differentiation on an append-only tape.
//!
//! Values are computed eagerly as ops are recorded; `backward` replays the
//! tape in reverse and accumulates gradients into a [`Params`] container.
//! Tapes are cheap to build and are meant to be discarded after each step.

use std::cell::RefCell;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::params::Params;
use crate::numerics::scalar::Scalar;
use crate::numerics::tensor::{shape_str, Tensor};

/// Natural-log floor applied inside `cross_entropy`.
pub const CE_LOG_FLOOR: f64 = -30.0;

const LN_EPS: f64 = 1e-5;

/// Handle to a node on a [`Tape`]. Only valid for the tape that created it.
#[derive(Debug, Clone, Copy)]
pub struct Var(usize);

enum Op<T> {
    Leaf,
    Param {
        slot: usize,
        name: String,
    },
    MatMul {
        a: usize,
        b: usize,
    },
    /// C = A * B^T without materializing the transpose.
    MatMulBT {
        a: usize,
        b: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    /// Adds a length-C vector to every row of an [R, C] matrix.
    AddRows {
        a: usize,
        b: usize,
    },
    Scale {
        a: usize,
        factor: T,
    },
    Transpose {
        a: usize,
    },
    Sum {
        a: usize,
    },
    GatherRows {
        a: usize,
        ids: Vec<usize>,
    },
    Gelu {
        a: usize,
    },
    LayerNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Tensor<T>,
        inv_std: Vec<T>,
    },
    SoftmaxRows {
        a: usize,
    },
    Dropout {
        a: usize,
        mask: Tensor<T>,
    },
    CrossEntropy {
        logits: usize,
        targets: usize,
        probs: Tensor<T>,
        keep: Vec<bool>,
        clamped: Tensor<T>,
    },
}

struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
}

/// Single-threaded computation graph.
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    fn push(&self, op: Op<T>, value: Tensor<T>) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op, value });
        Var(nodes.len() - 1)
    }

    /// Records a constant input. Leaves receive no gradient storage.
    pub fn leaf(&self, value: Tensor<T>) -> Var {
        self.push(Op::Leaf, value)
    }

    /// Binds a named parameter: its value is copied onto the tape, and
    /// `backward` adds the node's gradient back into the same container.
    pub fn param(&self, params: &Params<T>, name: &str) -> Result<Var> {
        let slot = params
            .slot(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter {name:?}")))?;
        let value = params.by_slot(slot).value.clone();
        Ok(self.push(
            Op::Param {
                slot,
                name: name.to_string(),
            },
            value,
        ))
    }

    pub fn shape(&self, v: Var) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    pub fn value(&self, v: Var) -> Tensor<T> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar_value(&self, v: Var) -> T {
        let nodes = self.nodes.borrow();
        let value = &nodes[v.0].value;
        assert!(value.is_scalar(), "node value is not a scalar");
        value.data()[0]
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            require_matrix("matmul", ta)?;
            require_matrix("matmul", tb)?;
            if ta.cols() != tb.rows() {
                return Err(shape_err("matmul", &[ta.shape(), tb.shape()]));
            }
            let mut out = Tensor::zeros(&[ta.rows(), tb.cols()]);
            gemm_acc(T::ONE, ta, false, tb, false, T::ZERO, &mut out);
            out
        };
        Ok(self.push(Op::MatMul { a: a.0, b: b.0 }, value))
    }

    /// `A * B^T` for `A: [M, K]` and `B: [N, K]`.
    pub fn matmul_bt(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            require_matrix("matmul_bt", ta)?;
            require_matrix("matmul_bt", tb)?;
            if ta.cols() != tb.cols() {
                return Err(shape_err("matmul_bt", &[ta.shape(), tb.shape()]));
            }
            let mut out = Tensor::zeros(&[ta.rows(), tb.rows()]);
            gemm_acc(T::ONE, ta, false, tb, true, T::ZERO, &mut out);
            out
        };
        Ok(self.push(Op::MatMulBT { a: a.0, b: b.0 }, value))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            if ta.shape() != tb.shape() {
                return Err(shape_err("add", &[ta.shape(), tb.shape()]));
            }
            let mut out = ta.clone();
            for (o, &v) in out.data_mut().iter_mut().zip(tb.data()) {
                *o += v;
            }
            out
        };
        Ok(self.push(Op::Add { a: a.0, b: b.0 }, value))
    }

    /// Broadcast add: `a` is `[R, C]`, `b` is `[C]`.
    pub fn add_rows(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
            require_matrix("add_rows", ta)?;
            if tb.shape().len() != 1 || tb.len() != ta.cols() {
                return Err(shape_err("add_rows", &[ta.shape(), tb.shape()]));
            }
            let cols = ta.cols();
            let mut out = ta.clone();
            for (i, v) in out.data_mut().iter_mut().enumerate() {
                *v += tb.data()[i % cols];
            }
            out
        };
        Ok(self.push(Op::AddRows { a: a.0, b: b.0 }, value))
    }

    pub fn scale(&self, a: Var, factor: f64) -> Var {
        let factor = T::from_f64(factor);
        let value = {
            let nodes = self.nodes.borrow();
            let mut out = nodes[a.0].value.clone();
            for v in out.data_mut() {
                *v *= factor;
            }
            out
        };
        self.push(Op::Scale { a: a.0, factor }, value)
    }

    pub fn transpose(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            require_matrix("transpose", ta)?;
            transpose_tensor(ta)
        };
        Ok(self.push(Op::Transpose { a: a.0 }, value))
    }

    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&self, a: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            Tensor::scalar(nodes[a.0].value.data().iter().copied().sum())
        };
        self.push(Op::Sum { a: a.0 }, value)
    }

    /// Copies the selected rows of `a`, in order, possibly with repeats.
    pub fn gather_rows(&self, a: Var, ids: &[usize]) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            require_matrix("gather_rows", ta)?;
            let rows = ta.rows();
            if let Some(&bad) = ids.iter().find(|&&id| id >= rows) {
                return Err(Error::InvalidArgument(format!(
                    "gather_rows: row {bad} out of range for {} rows",
                    rows
                )));
            }
            let cols = ta.cols();
            let mut data = Vec::with_capacity(ids.len() * cols);
            for &id in ids {
                data.extend_from_slice(ta.row(id));
            }
            Tensor::from_vec(&[ids.len(), cols], data)?
        };
        Ok(self.push(
            Op::GatherRows {
                a: a.0,
                ids: ids.to_vec(),
            },
            value,
        ))
    }

    /// Looks up embedding rows for a sequence of token ids.
    pub fn embedding_lookup(&self, table: Var, ids: &[u32]) -> Result<Var> {
        let rows: Vec<usize> = ids.iter().map(|&id| id as usize).collect();
        self.gather_rows(table, &rows)
    }

    /// Exact GELU: `x * Phi(x)` with the standard normal CDF.
    pub fn gelu(&self, a: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let mut out = nodes[a.0].value.clone();
            for v in out.data_mut() {
                *v = *v * normal_cdf(*v);
            }
            out
        };
        self.push(Op::Gelu { a: a.0 }, value)
    }

    /// Row-wise layer normalization followed by a learned affine map.
    pub fn layer_norm(&self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (value, xhat, inv_std) = {
            let nodes = self.nodes.borrow();
            let tx = &nodes[x.0].value;
            let tg = &nodes[gamma.0].value;
            let tb = &nodes[beta.0].value;
            require_matrix("layer_norm", tx)?;
            if tg.shape().len() != 1
                || tb.shape().len() != 1
                || tg.len() != tx.cols()
                || tb.len() != tx.cols()
            {
                return Err(shape_err("layer_norm", &[tx.shape(), tg.shape(), tb.shape()]));
            }
            let (rows, cols) = (tx.rows(), tx.cols());
            let eps = T::from_f64(LN_EPS);
            let inv_c = T::from_f64(1.0 / cols as f64);
            let mut xhat = Tensor::zeros(&[rows, cols]);
            let mut out = Tensor::zeros(&[rows, cols]);
            let mut inv_std = Vec::with_capacity(rows);
            for r in 0..rows {
                let row = tx.row(r);
                let mean = row.iter().copied().sum::<T>() * inv_c;
                let var = row
                    .iter()
                    .map(|&v| (v - mean) * (v - mean))
                    .sum::<T>()
                    * inv_c;
                let istd = T::ONE / (var + eps).sqrt();
                inv_std.push(istd);
                for (c, &x_rc) in row.iter().enumerate() {
                    let h = (x_rc - mean) * istd;
                    xhat.data_mut()[r * cols + c] = h;
                    out.data_mut()[r * cols + c] = tg.data()[c] * h + tb.data()[c];
                }
            }
            (out, xhat, inv_std)
        };
        Ok(self.push(
            Op::LayerNorm {
                x: x.0,
                gamma: gamma.0,
                beta: beta.0,
                xhat,
                inv_std,
            },
            value,
        ))
    }

    /// Numerically stable softmax over the last dimension of a matrix.
    pub fn softmax_rows(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            require_matrix("softmax_rows", ta)?;
            let (rows, cols) = (ta.rows(), ta.cols());
            let mut out = Tensor::zeros(&[rows, cols]);
            for r in 0..rows {
                let row = ta.row(r);
                let max = row
                    .iter()
                    .copied()
                    .fold(row[0], |acc, v| acc.max_with(v));
                let mut total = T::ZERO;
                for (c, &z) in row.iter().enumerate() {
                    let e = (z - max).exp();
                    out.data_mut()[r * cols + c] = e;
                    total += e;
                }
                let inv = T::ONE / total;
                for c in 0..cols {
                    out.data_mut()[r * cols + c] *= inv;
                }
            }
            out
        };
        Ok(self.push(Op::SoftmaxRows { a: a.0 }, value))
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - rate)` so the
    /// expectation matches evaluation mode, where dropout is skipped.
    pub fn dropout<R: Rng>(&self, a: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        let (value, mask) = {
            let nodes = self.nodes.borrow();
            let ta = &nodes[a.0].value;
            let mut mask = Tensor::filled(ta.shape(), T::ONE);
            if rate > 0.0 {
                let keep_scale = T::from_f64(1.0 / (1.0 - rate));
                for m in mask.data_mut() {
                    *m = if rng.gen::<f64>() < rate {
                        T::ZERO
                    } else {
                        keep_scale
                    };
                }
            }
            let mut out = ta.clone();
            for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
                *o *= m;
            }
            (out, mask)
        };
        Ok(self.push(Op::Dropout { a: a.0, mask }, value))
    }

    /// Mean over rows of the cross entropy between a target distribution and
    /// the softmax of the logits. Log probabilities are clamped at
    /// [`CE_LOG_FLOOR`] nats, and clamped coordinates get zero gradient.
    pub fn cross_entropy(&self, logits: Var, targets: Var) -> Result<Var> {
        let (value, probs, keep, clamped) = {
            let nodes = self.nodes.borrow();
            let tz = &nodes[logits.0].value;
            let tq = &nodes[targets.0].value;
            require_matrix("cross_entropy", tz)?;
            if tz.shape() != tq.shape() {
                return Err(shape_err("cross_entropy", &[tz.shape(), tq.shape()]));
            }
            let (rows, cols) = (tz.rows(), tz.cols());
            if rows == 0 {
                return Err(Error::ShapeMismatch {
                    op: "cross_entropy",
                    details: "at least one row is required".to_string(),
                });
            }
            let floor = T::from_f64(CE_LOG_FLOOR);
            let mut probs = Tensor::zeros(&[rows, cols]);
            let mut clamped = Tensor::zeros(&[rows, cols]);
            let mut keep = vec![false; rows * cols];
            let mut total = T::ZERO;
            for r in 0..rows {
                let row = tz.row(r);
                let max = row
                    .iter()
                    .copied()
                    .fold(row[0], |acc, v| acc.max_with(v));
                let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
                for (c, &z) in row.iter().enumerate() {
                    let logp = z - lse;
                    let idx = r * cols + c;
                    probs.data_mut()[idx] = logp.exp();
                    keep[idx] = logp > floor;
                    clamped.data_mut()[idx] = logp.max_with(floor);
                    total -= tq.data()[idx] * clamped.data()[idx];
                }
            }
            let loss = total * T::from_f64(1.0 / rows as f64);
            (Tensor::scalar(loss), probs, keep, clamped)
        };
        Ok(self.push(
            Op::CrossEntropy {
                logits: logits.0,
                targets: targets.0,
                probs,
                keep,
                clamped,
            },
            value,
        ))
    }

    /// Backpropagates from a scalar loss, adding gradients into `params`.
    /// Calling it repeatedly without zeroing accumulates.
    pub fn backward(&self, loss: Var, params: &mut Params<T>) -> Result<()> {
        let nodes = self.nodes.borrow();
        let loss_value = &nodes[loss.0].value;
        if !loss_value.is_scalar() {
            return Err(Error::ShapeMismatch {
                op: "backward",
                details: format!(
                    "loss must be a scalar, got shape {}",
                    shape_str(loss_value.shape())
                ),
            });
        }

        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(loss_value.shape(), T::ONE));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &nodes[i].op {
                Op::Leaf => {}
                Op::Param { slot, name } => {
                    if *slot >= params.len() || params.by_slot(*slot).name != *name {
                        return Err(Error::InvalidArgument(format!(
                            "parameter container does not match tape binding for {name:?}"
                        )));
                    }
                    let grad = &mut params.by_slot_mut(*slot).grad;
                    for (acc, &v) in grad.data_mut().iter_mut().zip(g.data()) {
                        *acc += v;
                    }
                }
                Op::MatMul { a, b } => {
                    let (ta, tb) = (&nodes[*a].value, &nodes[*b].value);
                    gemm_acc(T::ONE, &g, false, tb, true, T::ONE, slot(&mut grads, *a, ta));
                    gemm_acc(T::ONE, ta, true, &g, false, T::ONE, slot(&mut grads, *b, tb));
                }
                Op::MatMulBT { a, b } => {
                    let (ta, tb) = (&nodes[*a].value, &nodes[*b].value);
                    gemm_acc(T::ONE, &g, false, tb, false, T::ONE, slot(&mut grads, *a, ta));
                    gemm_acc(T::ONE, &g, true, ta, false, T::ONE, slot(&mut grads, *b, tb));
                }
                Op::Add { a, b } => {
                    add_into(slot(&mut grads, *a, &nodes[*a].value), g.data());
                    add_into(slot(&mut grads, *b, &nodes[*b].value), g.data());
                }
                Op::AddRows { a, b } => {
                    add_into(slot(&mut grads, *a, &nodes[*a].value), g.data());
                    let cols = nodes[*b].value.len();
                    let gb = slot(&mut grads, *b, &nodes[*b].value);
                    for (i, &v) in g.data().iter().enumerate() {
                        gb.data_mut()[i % cols] += v;
                    }
                }
                Op::Scale { a, factor } => {
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for (acc, &v) in ga.data_mut().iter_mut().zip(g.data()) {
                        *acc += *factor * v;
                    }
                }
                Op::Transpose { a } => {
                    let gt = transpose_tensor(&g);
                    add_into(slot(&mut grads, *a, &nodes[*a].value), gt.data());
                }
                Op::Sum { a } => {
                    let g0 = g.data()[0];
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for acc in ga.data_mut() {
                        *acc += g0;
                    }
                }
                Op::GatherRows { a, ids } => {
                    let cols = nodes[*a].value.cols();
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for (i, &id) in ids.iter().enumerate() {
                        let src = &g.data()[i * cols..(i + 1) * cols];
                        let dst = &mut ga.data_mut()[id * cols..(id + 1) * cols];
                        for (acc, &v) in dst.iter_mut().zip(src) {
                            *acc += v;
                        }
                    }
                }
                Op::Gelu { a } => {
                    let input = nodes[*a].value.data();
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for (i, acc) in ga.data_mut().iter_mut().enumerate() {
                        let x = input[i];
                        *acc += g.data()[i] * (normal_cdf(x) + x * normal_pdf(x));
                    }
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let tg = &nodes[*gamma].value;
                    let (rows, cols) = (xhat.rows(), xhat.cols());
                    let inv_c = T::from_f64(1.0 / cols as f64);
                    {
                        let gx = slot(&mut grads, *x, &nodes[*x].value);
                        for (r, &istd) in inv_std.iter().enumerate() {
                            let mut sum1 = T::ZERO;
                            let mut sum2 = T::ZERO;
                            for c in 0..cols {
                                let dxhat = g.data()[r * cols + c] * tg.data()[c];
                                sum1 += dxhat;
                                sum2 += dxhat * xhat.data()[r * cols + c];
                            }
                            for c in 0..cols {
                                let idx = r * cols + c;
                                let dxhat = g.data()[idx] * tg.data()[c];
                                gx.data_mut()[idx] +=
                                    istd * (dxhat - sum1 * inv_c - xhat.data()[idx] * sum2 * inv_c);
                            }
                        }
                    }
                    {
                        let gg = slot(&mut grads, *gamma, &nodes[*gamma].value);
                        for r in 0..rows {
                            for c in 0..cols {
                                gg.data_mut()[c] +=
                                    g.data()[r * cols + c] * xhat.data()[r * cols + c];
                            }
                        }
                    }
                    {
                        let gb = slot(&mut grads, *beta, &nodes[*beta].value);
                        for r in 0..rows {
                            for c in 0..cols {
                                gb.data_mut()[c] += g.data()[r * cols + c];
                            }
                        }
                    }
                }
                Op::SoftmaxRows { a } => {
                    let y = &nodes[i].value;
                    let (rows, cols) = (y.rows(), y.cols());
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for r in 0..rows {
                        let mut dot = T::ZERO;
                        for c in 0..cols {
                            let idx = r * cols + c;
                            dot += g.data()[idx] * y.data()[idx];
                        }
                        for c in 0..cols {
                            let idx = r * cols + c;
                            ga.data_mut()[idx] += y.data()[idx] * (g.data()[idx] - dot);
                        }
                    }
                }
                Op::Dropout { a, mask } => {
                    let ga = slot(&mut grads, *a, &nodes[*a].value);
                    for (i, acc) in ga.data_mut().iter_mut().enumerate() {
                        *acc += g.data()[i] * mask.data()[i];
                    }
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                    keep,
                    clamped,
                } => {
                    let g0 = g.data()[0];
                    let tq = &nodes[*targets].value;
                    let (rows, cols) = (probs.rows(), probs.cols());
                    let inv_r = T::from_f64(1.0 / rows as f64);
                    {
                        let gz = slot(&mut grads, *logits, &nodes[*logits].value);
                        for r in 0..rows {
                            let mut kept_mass = T::ZERO;
                            for c in 0..cols {
                                let idx = r * cols + c;
                                if keep[idx] {
                                    kept_mass += tq.data()[idx];
                                }
                            }
                            for c in 0..cols {
                                let idx = r * cols + c;
                                let direct = if keep[idx] { tq.data()[idx] } else { T::ZERO };
                                gz.data_mut()[idx] +=
                                    g0 * inv_r * (probs.data()[idx] * kept_mass - direct);
                            }
                        }
                    }
                    {
                        let gq = slot(&mut grads, *targets, &nodes[*targets].value);
                        for (idx, acc) in gq.data_mut().iter_mut().enumerate() {
                            *acc += -g0 * inv_r * clamped.data()[idx];
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn slot<'g, T: Scalar>(
    grads: &'g mut [Option<Tensor<T>>],
    idx: usize,
    like: &Tensor<T>,
) -> &'g mut Tensor<T> {
    grads[idx].get_or_insert_with(|| Tensor::zeros(like.shape()))
}

fn add_into<T: Scalar>(dst: &mut Tensor<T>, src: &[T]) {
    for (acc, &v) in dst.data_mut().iter_mut().zip(src) {
        *acc += v;
    }
}

fn require_matrix<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<()> {
    if t.shape().len() != 2 {
        return Err(Error::ShapeMismatch {
            op,
            details: format!("expected a matrix, got shape {}", shape_str(t.shape())),
        });
    }
    Ok(())
}

fn shape_err(op: &'static str, shapes: &[&[usize]]) -> Error {
    let rendered: Vec<String> = shapes.iter().map(|s| shape_str(s)).collect();
    Error::ShapeMismatch {
        op,
        details: format!("incompatible shapes {}", rendered.join(" x ")),
    }
}

fn transpose_tensor<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let (rows, cols) = (t.rows(), t.cols());
    let mut out = Tensor::zeros(&[cols, rows]);
    for r in 0..rows {
        for c in 0..cols {
            out.data_mut()[c * rows + r] = t.data()[r * cols + c];
        }
    }
    out
}

/// `C := alpha * op(A) * op(B) + beta * C`, with `op` an optional transpose
/// realized through strides rather than copies.
fn gemm_acc<T: Scalar>(
    alpha: T,
    a: &Tensor<T>,
    ta: bool,
    b: &Tensor<T>,
    tb: bool,
    beta: T,
    c: &mut Tensor<T>,
) {
    let (m, ka, rsa, csa) = view(a, ta);
    let (kb, n, rsb, csb) = view(b, tb);
    debug_assert_eq!(ka, kb);
    debug_assert_eq!(c.rows(), m);
    debug_assert_eq!(c.cols(), n);
    let rsc = c.cols() as isize;
    unsafe {
        T::gemm(
            m,
            ka,
            n,
            alpha,
            a.data().as_ptr(),
            rsa,
            csa,
            b.data().as_ptr(),
            rsb,
            csb,
            beta,
            c.data_mut().as_mut_ptr(),
            rsc,
            1,
        );
    }
}

fn view<T: Scalar>(t: &Tensor<T>, transposed: bool) -> (usize, usize, isize, isize) {
    let (r, c) = (t.rows(), t.cols());
    if transposed {
        (c, r, 1, c as isize)
    } else {
        (r, c, c as isize, 1)
    }
}

fn normal_cdf<T: Scalar>(x: T) -> T {
    let half = T::from_f64(0.5);
    half * (T::ONE + (x * T::from_f64(std::f64::consts::FRAC_1_SQRT_2)).erf())
}

fn normal_pdf<T: Scalar>(x: T) -> T {
    let x64 = x.to_f64();
    T::from_f64((-0.5 * x64 * x64).exp() / (2.0 * std::f64::consts::PI).sqrt())
}
