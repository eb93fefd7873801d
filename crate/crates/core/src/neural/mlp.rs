//! Fully connected SiLU networks with batched forward and reverse passes.
//!
//! Batches are stored as matrices with one row per evaluation and one column
//! per neuron. A *jet* batch of `b` points carries four row blocks of `b` rows
//! each: the value, the two spatial first derivatives and the spatial
//! Laplacian. Affine layers act on every block alike (the bias only touches
//! the value block) and SiLU applies the chain rule
//!
//! ```text
//! ∂σ(z) = σ'(z) ∂z
//! Δσ(z) = σ''(z) |∇z|² + σ'(z) Δz
//! ```
//!
//! so the Laplacian is exact without forming the full Hessian. The reverse
//! pass differentiates through this extended forward pass, which is what the
//! PDE loss needs for parameter gradients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Number of row blocks in a jet batch: value, ∂x, ∂y, Laplacian.
pub const JET_BLOCKS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out × in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense { weights: DMatrix::zeros(output, input), bias: DVector::zeros(output) }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Layer stack; SiLU after every layer except the last.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

impl MlpParams {
    /// `dims = [input, hidden.., output]`.
    pub fn zeros(dims: &[usize]) -> Self {
        MlpParams { layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() }
    }

    /// Fan-in uniform initialization: weights in `±√(6/fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut p = MlpParams::zeros(dims);
        for layer in &mut p.layers {
            let bound = (6.0 / layer.input_dim() as f64).sqrt();
            let (rows, cols) = layer.weights.shape();
            for r in 0..rows {
                for c in 0..cols {
                    layer.weights[(r, c)] = rng.random_range(-bound..bound);
                }
            }
        }
        p
    }

    /// `dims = [input, hidden × layers, output]`.
    pub fn architecture(input: usize, hidden: usize, hidden_layers: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(hidden, hidden_layers));
        dims.push(output);
        dims
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(Dense::input_dim).collect();
        d.extend(self.layers.last().map(Dense::output_dim));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, Dense::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::output_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.shape() == b.weights.shape() && a.bias.len() == b.bias.len())
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams::zeros(&self.dims())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Parameters in file order: per layer, weights row-major then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            for r in 0..l.weights.nrows() {
                out.extend(l.weights.row(r).iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    /// Inverse of [`MlpParams::to_flat`]; returns the number of values consumed.
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<usize> {
        if flat.len() < self.param_count() {
            return Err(Error::invalid(format!(
                "parameter buffer holds {} values, network needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut i = 0;
        for l in &mut self.layers {
            let (rows, cols) = l.weights.shape();
            for r in 0..rows {
                for c in 0..cols {
                    l.weights[(r, c)] = flat[i];
                    i += 1;
                }
            }
            for b in l.bias.iter_mut() {
                *b = flat[i];
                i += 1;
            }
        }
        Ok(i)
    }

    /// Mutable views of every parameter tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &MlpParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }
}

/// SiLU `z·s(z)` and its first three derivatives.
#[inline]
pub fn silu_derivatives(z: f64) -> [f64; 4] {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    let p = s * (1.0 - s);
    let w = 1.0 - 2.0 * s;
    [z * s, s * (1.0 + z * (1.0 - s)), p * (2.0 + z * w), p * (w * (3.0 + z * w) - 2.0 * z * p)]
}

pub fn silu(z: f64) -> f64 {
    silu_derivatives(z)[0]
}

/// Single-input evaluation.
pub fn mlp_forward(p: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != p.input_dim() {
        return Err(Error::invalid(format!("network expects {} inputs, got {}", p.input_dim(), input.len())));
    }
    let mut a = DVector::from_column_slice(input);
    let last = p.layers.len().saturating_sub(1);
    for (i, l) in p.layers.iter().enumerate() {
        let mut z = &l.weights * &a + &l.bias;
        if i < last {
            z.apply(|v| *v = silu(*v));
        }
        a = z;
    }
    Ok(a.iter().copied().collect())
}

/// Intermediate values kept for the reverse pass.
pub struct Tape {
    blocks: usize,
    batch: usize,
    /// Input to each layer, `rows × in`.
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<DMatrix<f64>>,
}

/// Batched forward pass.
///
/// `input` has `blocks · batch` rows. With `blocks == 1` it is a plain value
/// batch; with `blocks == JET_BLOCKS` the rows are (value, ∂x, ∂y, Δ) blocks.
pub fn forward_batch(p: &MlpParams, input: DMatrix<f64>, blocks: usize, batch: usize) -> (DMatrix<f64>, Tape) {
    debug_assert!(blocks == 1 || blocks == JET_BLOCKS);
    debug_assert_eq!(input.nrows(), blocks * batch);
    let last = p.layers.len() - 1;
    let mut tape = Tape { blocks, batch, inputs: Vec::with_capacity(p.layers.len()), pre: Vec::new() };
    let mut a = input;
    for (i, l) in p.layers.iter().enumerate() {
        let mut z = &a * l.weights.transpose();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            let b = l.bias[j];
            col.rows_mut(0, batch).add_scalar_mut(b);
        }
        tape.inputs.push(a);
        if i == last {
            return (z, tape);
        }
        let act = activate(&z, blocks, batch);
        tape.pre.push(z);
        a = act;
    }
    unreachable!("network has at least one layer")
}

fn activate(z: &DMatrix<f64>, blocks: usize, batch: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for (zc, mut oc) in z.column_iter().zip(out.column_iter_mut()) {
        let zc = zc.as_slice();
        let oc = oc.as_mut_slice();
        if blocks == 1 {
            for (o, &v) in oc.iter_mut().zip(zc) {
                *o = silu(v);
            }
            continue;
        }
        for s in 0..batch {
            let [f0, f1, f2, _] = silu_derivatives(zc[s]);
            let (g1, g2, lap) = (zc[batch + s], zc[2 * batch + s], zc[3 * batch + s]);
            oc[s] = f0;
            oc[batch + s] = f1 * g1;
            oc[2 * batch + s] = f1 * g2;
            oc[3 * batch + s] = f2 * (g1 * g1 + g2 * g2) + f1 * lap;
        }
    }
    out
}

/// Adjoint of [`activate`]: maps `∂L/∂(activated)` to `∂L/∂(pre-activation)`.
fn activate_backward(z: &DMatrix<f64>, adj: &DMatrix<f64>, blocks: usize, batch: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for ((zc, ac), mut oc) in z.column_iter().zip(adj.column_iter()).zip(out.column_iter_mut()) {
        let (zc, ac, oc) = (zc.as_slice(), ac.as_slice(), oc.as_mut_slice());
        if blocks == 1 {
            for ((o, &v), &a) in oc.iter_mut().zip(zc).zip(ac) {
                *o = a * silu_derivatives(v)[1];
            }
            continue;
        }
        for s in 0..batch {
            let [_, f1, f2, f3] = silu_derivatives(zc[s]);
            let (g1, g2, lap) = (zc[batch + s], zc[2 * batch + s], zc[3 * batch + s]);
            let (av, ag1, ag2, al) = (ac[s], ac[batch + s], ac[2 * batch + s], ac[3 * batch + s]);
            oc[s] = av * f1 + (ag1 * g1 + ag2 * g2) * f2 + al * (f3 * (g1 * g1 + g2 * g2) + f2 * lap);
            oc[batch + s] = ag1 * f1 + 2.0 * al * f2 * g1;
            oc[2 * batch + s] = ag2 * f1 + 2.0 * al * f2 * g2;
            oc[3 * batch + s] = al * f1;
        }
    }
    out
}

/// Reverse pass: accumulates parameter gradients into `grads` given the
/// adjoint of the network output (same layout as the forward output).
pub fn backward_batch(p: &MlpParams, tape: &Tape, output_adjoint: DMatrix<f64>, grads: &mut MlpParams) {
    let (blocks, batch) = (tape.blocks, tape.batch);
    let mut adj = output_adjoint;
    for i in (0..p.layers.len()).rev() {
        let input = &tape.inputs[i];
        let g = &mut grads.layers[i];
        // ∂L/∂W += adjᵀ · input, ∂L/∂b += column sums over the value block.
        g.weights.gemm_tr(1.0, &adj, input, 1.0);
        for (j, col) in adj.column_iter().enumerate() {
            g.bias[j] += col.rows(0, batch).sum();
        }
        if i == 0 {
            break;
        }
        let upstream = &adj * &p.layers[i].weights;
        adj = activate_backward(&tape.pre[i - 1], &upstream, blocks, batch);
    }
}
