//! Composite training loss and its exact parameter gradients.
//!
//! ```text
//! L      = L_pde + λ_norm·L_norm + λ_bc·L_bc
//! L_pde  = mean |H_b u − E u|²,   H_b = −½(∇ + ik)² + V
//! L_norm = mean_k ((A/G²)·Σ_grid |u|² − 1)²
//! L_bc   = mean over points and j ∈ {1, 2} of |u(x + a_j) − u(x)|²
//! ```
//!
//! Batches are processed in fixed-size chunks in index order, so sums and
//! gradients are reproducible bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::grid_points;
use crate::lattice::{Lattice, Vec2};
use crate::potential::Potential;

use super::mlp::{backward_batch, forward_batch, JET_BLOCKS};
use super::{EpochSamples, MlpParams, TrainConfig};

const CHUNK: usize = 256;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub epoch: usize,
    pub lr: f64,
    pub total: f64,
    pub pde: f64,
    pub norm: f64,
    pub bc: f64,
}

impl LossBreakdown {
    pub fn from_components(pde: f64, norm: f64, bc: f64, cfg: &TrainConfig) -> Self {
        LossBreakdown {
            epoch: 0,
            lr: 0.0,
            total: pde + cfg.lambda_norm * norm + cfg.lambda_bc * bc,
            pde,
            norm,
            bc,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.pde.is_finite() && self.norm.is_finite() && self.bc.is_finite()
    }
}

/// Value, spatial gradient and spatial Laplacian of the Bloch network output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialJet {
    pub u: Complex64,
    pub grad: [Complex64; 2],
    pub laplacian: Complex64,
}

/// Parameter gradients for both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub bloch: MlpParams,
    pub energy: MlpParams,
}

impl Gradients {
    pub fn zeros(theta: &MlpParams, phi: &MlpParams) -> Self {
        Gradients { bloch: theta.zeros_like(), energy: phi.zeros_like() }
    }
}

fn jet_input(points: &[(Vec2, Vec2)]) -> DMatrix<f64> {
    let b = points.len();
    let mut m = DMatrix::zeros(JET_BLOCKS * b, 4);
    for (s, (x, k)) in points.iter().enumerate() {
        m[(s, 0)] = x.x;
        m[(s, 1)] = x.y;
        m[(s, 2)] = k.x;
        m[(s, 3)] = k.y;
        m[(b + s, 0)] = 1.0;
        m[(2 * b + s, 1)] = 1.0;
    }
    m
}

fn value_input(points: impl ExactSizeIterator<Item = (Vec2, Vec2)>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(points.len(), 4);
    for (s, (x, k)) in points.enumerate() {
        m[(s, 0)] = x.x;
        m[(s, 1)] = x.y;
        m[(s, 2)] = k.x;
        m[(s, 3)] = k.y;
    }
    m
}

fn k_input(ks: impl ExactSizeIterator<Item = Vec2>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ks.len(), 2);
    for (s, k) in ks.enumerate() {
        m[(s, 0)] = k.x;
        m[(s, 1)] = k.y;
    }
    m
}

fn check_bloch(theta: &MlpParams) -> Result<()> {
    if theta.input_dim() != 4 || theta.output_dim() != 2 {
        return Err(Error::invalid("Bloch network must map 4 inputs to 2 outputs"));
    }
    Ok(())
}

fn check_energy(phi: &MlpParams) -> Result<()> {
    if phi.input_dim() != 2 || phi.output_dim() != 1 {
        return Err(Error::invalid("energy network must map 2 inputs to 1 output"));
    }
    Ok(())
}

pub fn spatial_jet(theta: &MlpParams, x: &Vec2, k: &Vec2) -> Result<SpatialJet> {
    check_bloch(theta)?;
    let (out, _) = forward_batch(theta, jet_input(&[(*x, *k)]), JET_BLOCKS, 1);
    let c = |r: usize| Complex64::new(out[(r, 0)], out[(r, 1)]);
    Ok(SpatialJet { u: c(0), grad: [c(1), c(2)], laplacian: c(3) })
}

/// Bloch network value at each `(x, k)`.
pub fn bloch_values(theta: &MlpParams, points: &[(Vec2, Vec2)]) -> Result<Vec<Complex64>> {
    check_bloch(theta)?;
    let mut out = Vec::with_capacity(points.len());
    for chunk in points.chunks(4 * CHUNK) {
        let (o, _) = forward_batch(theta, value_input(chunk.iter().copied()), 1, chunk.len());
        out.extend((0..chunk.len()).map(|s| Complex64::new(o[(s, 0)], o[(s, 1)])));
    }
    Ok(out)
}

/// Energy network value at each k.
pub fn energy_values(phi: &MlpParams, ks: &[Vec2]) -> Result<Vec<f64>> {
    check_energy(phi)?;
    let mut out = Vec::with_capacity(ks.len());
    for chunk in ks.chunks(4 * CHUNK) {
        let (o, _) = forward_batch(phi, k_input(chunk.iter().copied()), 1, chunk.len());
        out.extend(o.column(0).iter().copied());
    }
    Ok(out)
}

/// `H_b u − E u` at one point.
pub fn pde_residual(theta: &MlpParams, phi: &MlpParams, x: &Vec2, k: &Vec2, pot: &Potential) -> Result<Complex64> {
    let jet = spatial_jet(theta, x, k)?;
    let e = energy_values(phi, &[*k])?[0];
    let kgrad = jet.grad[0] * k.x + jet.grad[1] * k.y;
    let i = Complex64::i();
    let hu = -0.5 * (jet.laplacian + 2.0 * i * kgrad - k.norm_squared() * jet.u) + pot.value(x) * jet.u;
    Ok(hu - e * jet.u)
}

/// `Σ |r|²` over the batch; with `grads`, adds `weight · ∂(Σ|r|²)/∂params`.
fn pde_sum(
    theta: &MlpParams,
    phi: &MlpParams,
    batch: &[(Vec2, Vec2)],
    pot: &Potential,
    mut grads: Option<(&mut Gradients, f64)>,
) -> f64 {
    let mut sum = 0.0;
    for chunk in batch.chunks(CHUNK) {
        let b = chunk.len();
        let (out, tape) = forward_batch(theta, jet_input(chunk), JET_BLOCKS, b);
        let (e, etape) = forward_batch(phi, k_input(chunk.iter().map(|p| p.1)), 1, b);
        let mut adj = grads.as_ref().map(|_| (DMatrix::zeros(JET_BLOCKS * b, 2), DMatrix::zeros(b, 1)));
        for (s, (x, k)) in chunk.iter().enumerate() {
            let (ur, ui) = (out[(s, 0)], out[(s, 1)]);
            let (gr, gi) = ([out[(b + s, 0)], out[(2 * b + s, 0)]], [out[(b + s, 1)], out[(2 * b + s, 1)]]);
            let (lr, li) = (out[(3 * b + s, 0)], out[(3 * b + s, 1)]);
            let c = 0.5 * k.norm_squared() + pot.value(x) - e[(s, 0)];
            let rr = -0.5 * lr + k.x * gi[0] + k.y * gi[1] + c * ur;
            let ri = -0.5 * li - k.x * gr[0] - k.y * gr[1] + c * ui;
            sum += rr * rr + ri * ri;
            if let (Some((ua, ea)), Some((_, w))) = (adj.as_mut(), grads.as_ref()) {
                let (br, bi) = (2.0 * w * rr, 2.0 * w * ri);
                ua[(s, 0)] = br * c;
                ua[(s, 1)] = bi * c;
                for (d, kd) in [k.x, k.y].into_iter().enumerate() {
                    ua[((1 + d) * b + s, 0)] = -bi * kd;
                    ua[((1 + d) * b + s, 1)] = br * kd;
                }
                ua[(3 * b + s, 0)] = -0.5 * br;
                ua[(3 * b + s, 1)] = -0.5 * bi;
                ea[(s, 0)] = -(br * ur + bi * ui);
            }
        }
        if let (Some((ua, ea)), Some((g, _))) = (adj, grads.as_mut()) {
            backward_batch(theta, &tape, ua, &mut g.bloch);
            backward_batch(phi, &etape, ea, &mut g.energy);
        }
    }
    sum
}

/// `Σ_k (Î(k) − 1)²` with gradient as in [`pde_sum`].
fn norm_sum(theta: &MlpParams, ks: &[Vec2], lat: &Lattice, g: usize, mut grads: Option<(&mut Gradients, f64)>) -> f64 {
    let nodes = grid_points(lat, g);
    let scale = lat.cell_area / (g * g) as f64;
    let mut sum = 0.0;
    for k in ks {
        let n = nodes.len();
        let (out, tape) = forward_batch(theta, value_input(nodes.iter().map(|x| (*x, *k))), 1, n);
        let integral = scale * (0..n).map(|s| out[(s, 0)].powi(2) + out[(s, 1)].powi(2)).sum::<f64>();
        let dev = integral - 1.0;
        sum += dev * dev;
        if let Some((gr, w)) = grads.as_mut() {
            let f = *w * 2.0 * dev * scale * 2.0;
            let adj = out.map(|v| f * v);
            backward_batch(theta, &tape, adj, &mut gr.bloch);
        }
    }
    sum
}

/// `Σ_points Σ_j |u(x + a_j) − u(x)|²` with gradient as in [`pde_sum`].
fn bc_sum(theta: &MlpParams, batch: &[(Vec2, Vec2)], lat: &Lattice, mut grads: Option<(&mut Gradients, f64)>) -> f64 {
    let mut sum = 0.0;
    for chunk in batch.chunks(CHUNK) {
        let b = chunk.len();
        let shifted = [Vec2::zeros(), lat.a1, lat.a2];
        let pts: Vec<(Vec2, Vec2)> =
            shifted.iter().flat_map(|sh| chunk.iter().map(move |(x, k)| (x + sh, *k))).collect();
        let (out, tape) = forward_batch(theta, value_input(pts.into_iter()), 1, 3 * b);
        let mut adj = grads.as_ref().map(|_| DMatrix::zeros(3 * b, 2));
        for s in 0..b {
            for j in 1..=2 {
                for c in 0..2 {
                    let d = out[(j * b + s, c)] - out[(s, c)];
                    sum += d * d;
                    if let (Some(a), Some((_, w))) = (adj.as_mut(), grads.as_ref()) {
                        a[(j * b + s, c)] += 2.0 * w * d;
                        a[(s, c)] -= 2.0 * w * d;
                    }
                }
            }
        }
        if let (Some(a), Some((g, _))) = (adj, grads.as_mut()) {
            backward_batch(theta, &tape, a, &mut g.bloch);
        }
    }
    sum
}

fn non_empty<T>(batch: &[T], what: &str) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid(format!("{what} batch is empty")));
    }
    Ok(())
}

pub fn loss_pde(theta: &MlpParams, phi: &MlpParams, batch: &[(Vec2, Vec2)], pot: &Potential) -> Result<f64> {
    check_bloch(theta)?;
    check_energy(phi)?;
    non_empty(batch, "collocation")?;
    Ok(pde_sum(theta, phi, batch, pot, None) / batch.len() as f64)
}

pub fn loss_norm(theta: &MlpParams, ks: &[Vec2], lat: &Lattice, g: usize) -> Result<f64> {
    check_bloch(theta)?;
    crate::grid::check_grid(g)?;
    non_empty(ks, "normalization")?;
    Ok(norm_sum(theta, ks, lat, g, None) / ks.len() as f64)
}

pub fn loss_bc(theta: &MlpParams, batch: &[(Vec2, Vec2)], lat: &Lattice) -> Result<f64> {
    check_bloch(theta)?;
    non_empty(batch, "boundary")?;
    Ok(bc_sum(theta, batch, lat, None) / (2 * batch.len()) as f64)
}

fn evaluate(
    theta: &MlpParams,
    phi: &MlpParams,
    samples: &EpochSamples,
    cfg: &TrainConfig,
    pot: &Potential,
    lat: &Lattice,
    mut grads: Option<&mut Gradients>,
) -> Result<LossBreakdown> {
    check_bloch(theta)?;
    check_energy(phi)?;
    non_empty(&samples.collocation, "collocation")?;
    non_empty(&samples.norm_k, "normalization")?;
    non_empty(&samples.boundary, "boundary")?;
    crate::grid::check_grid(cfg.norm_grid)?;
    let np = samples.collocation.len() as f64;
    let nn = samples.norm_k.len() as f64;
    let nb = (2 * samples.boundary.len()) as f64;
    let pde = pde_sum(theta, phi, &samples.collocation, pot, grads.as_deref_mut().map(|g| (g, 1.0 / np))) / np;
    let norm = norm_sum(theta, &samples.norm_k, lat, cfg.norm_grid, grads.as_deref_mut().map(|g| (g, cfg.lambda_norm / nn)))
        / nn;
    let bc = bc_sum(theta, &samples.boundary, lat, grads.map(|g| (g, cfg.lambda_bc / nb))) / nb;
    Ok(LossBreakdown::from_components(pde, norm, bc, cfg))
}

pub fn total_loss(
    theta: &MlpParams,
    phi: &MlpParams,
    samples: &EpochSamples,
    cfg: &TrainConfig,
    pot: &Potential,
    lat: &Lattice,
) -> Result<LossBreakdown> {
    evaluate(theta, phi, samples, cfg, pot, lat, None)
}

/// Loss and its exact gradient with respect to both networks.
pub fn param_gradients(
    theta: &MlpParams,
    phi: &MlpParams,
    samples: &EpochSamples,
    cfg: &TrainConfig,
    pot: &Potential,
    lat: &Lattice,
) -> Result<(LossBreakdown, Gradients)> {
    let mut g = Gradients::zeros(theta, phi);
    let loss = evaluate(theta, phi, samples, cfg, pot, lat, Some(&mut g))?;
    Ok((loss, g))
}
