//! Plane-wave expansion of the Bloch eigenproblem.
//!
//! Expanding `u(x) = Σ_Q c(Q) e^{iQ·x}` over reciprocal lattice vectors turns
//! `H_b u = E u` into the Hermitian matrix problem
//!
//! ```text
//! ½|k + Q|² c(Q) + Σ_{Q'} V_{Q-Q'} c(Q') = E c(Q)
//! ```
//!
//! truncated to the box `|m|, |n| ≤ N_c` with `Q = m·b1 + n·b2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{check_grid, ComplexGrid, Grid, RealGrid};
use crate::lattice::{KPoint, Lattice, Vec2};
use crate::potential::Potential;

/// Default truncation, 225 plane waves.
pub const DEFAULT_CUTOFF: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct PlanewaveBasis {
    cutoff: usize,
    indices: Vec<(i32, i32)>,
    vectors: Vec<Vec2>,
}

impl PlanewaveBasis {
    /// Box basis ordered row-major in `(m, n)`, both ascending.
    pub fn new(cutoff: usize, lat: &Lattice) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::invalid("plane-wave cutoff must be positive"));
        }
        let c = cutoff as i32;
        let indices: Vec<(i32, i32)> = (-c..=c).flat_map(|m| (-c..=c).map(move |n| (m, n))).collect();
        let vectors = indices.iter().map(|&(m, n)| lat.reciprocal(m, n)).collect();
        Ok(PlanewaveBasis { cutoff, indices, vectors })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(i32, i32)] {
        &self.indices
    }

    pub fn vectors(&self) -> &[Vec2] {
        &self.vectors
    }

    pub fn index_of(&self, m: i32, n: i32) -> Option<usize> {
        let c = self.cutoff as i32;
        if m.abs() > c || n.abs() > c {
            return None;
        }
        Some(((m + c) * (2 * c + 1) + (n + c)) as usize)
    }
}

/// `H[Q, Q'] = ½|k + Q|² δ_{QQ'} + V_{Q-Q'}`.
pub fn build_hamiltonian(k: &Vec2, pot: &Potential, basis: &PlanewaveBasis) -> DMatrix<Complex64> {
    let n = basis.len();
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for (row, (&(m, nn), q)) in basis.indices.iter().zip(&basis.vectors).enumerate() {
        h[(row, row)] = Complex64::new(0.5 * (k + q).norm_squared(), 0.0);
        for (&(dm, dn), v) in pot.coefficients() {
            if let Some(col) = basis.index_of(m - dm, nn - dn) {
                h[(row, col)] += v;
            }
        }
    }
    h
}

/// Lowest eigenpairs of the truncated Bloch Hamiltonian at one k-point.
#[derive(Clone, Debug)]
pub struct SpectralSolution {
    pub k: KPoint,
    /// Ascending.
    pub energies: Vec<f64>,
    /// One unit-norm coefficient vector per band, ordered like the basis.
    pub coefficients: Vec<Vec<Complex64>>,
    basis: PlanewaveBasis,
}

impl SpectralSolution {
    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }

    pub fn basis(&self) -> &PlanewaveBasis {
        &self.basis
    }

    fn band_coefficients(&self, band: usize) -> Result<&[Complex64]> {
        self.coefficients.get(band).map(Vec::as_slice).ok_or_else(|| {
            Error::invalid(format!("band {band} out of range ({} bands stored)", self.coefficients.len()))
        })
    }

    /// `u(x) = Σ_K c(K) e^{iK·x}`.
    pub fn bloch_function(&self, band: usize, x: &Vec2) -> Result<Complex64> {
        let c = self.band_coefficients(band)?;
        Ok(c.iter().zip(&self.basis.vectors).map(|(c, q)| c * Complex64::from_polar(1.0, q.dot(x))).sum())
    }

    /// `u` on the `n × n` fractional grid.
    ///
    /// Phases are taken from the integer table `2π(m·i + n·j)/n`, so the grid
    /// values are exactly periodic and distinct modes are discretely orthogonal
    /// whenever `n` exceeds the spread of basis indices.
    pub fn bloch_grid(&self, band: usize, n: usize) -> Result<ComplexGrid> {
        check_grid(n)?;
        let c = self.band_coefficients(band)?;
        let table: Vec<Complex64> =
            (0..n).map(|p| Complex64::from_polar(1.0, 2.0 * PI * p as f64 / n as f64)).collect();
        let ni = n as i64;
        Ok(Grid::from_fn(n, |i, j| {
            c.iter()
                .zip(&self.basis.indices)
                .map(|(c, &(m, nn))| {
                    let p = (m as i64 * i as i64 + nn as i64 * j as i64).rem_euclid(ni);
                    c * table[p as usize]
                })
                .sum()
        }))
    }

    /// `|u|²` on the fractional grid.
    pub fn bloch_density_grid(&self, band: usize, n: usize) -> Result<RealGrid> {
        Ok(self.bloch_grid(band, n)?.density())
    }
}

/// Makes the largest-magnitude component real and positive (lowest index on ties).
fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|c| c.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for c in v.iter_mut() {
        *c *= phase;
    }
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

/// `v^H H v` for unit `v`. The quotient is second order in the eigenvector
/// error, so it recovers low eigenvalues to roughly `eps·|E|` rather than the
/// `eps·‖H‖` of the QR iteration.
fn rayleigh_quotient(h: &DMatrix<Complex64>, v: &[Complex64]) -> f64 {
    let v = DVector::from_column_slice(v);
    v.dotc(&(h * &v)).re
}

fn lowest_support_index(v: &[Complex64]) -> usize {
    v.iter().position(|c| c.norm() > 1e-10).unwrap_or(v.len())
}

fn is_real(pot: &Potential) -> bool {
    pot.coefficients().values().all(|c| c.im == 0.0)
}

fn real_hamiltonian(k: &Vec2, pot: &Potential, basis: &PlanewaveBasis) -> DMatrix<f64> {
    build_hamiltonian(k, pot, basis).map(|c| c.re)
}

fn check_bands(n_bands: usize, basis: &PlanewaveBasis) -> Result<()> {
    if n_bands == 0 || n_bands > basis.len() {
        return Err(Error::invalid(format!("n_bands must lie in 1..={}, got {n_bands}", basis.len())));
    }
    Ok(())
}

fn sorted_lowest(values: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = values.collect();
    e.sort_by(f64::total_cmp);
    e.truncate(n);
    e
}

/// Lowest `n_bands` eigenvalues only, without eigenvectors.
///
/// Real-coefficient potentials (the three-cosine family) give a real
/// symmetric matrix and are diagonalized in real arithmetic.
pub fn energies_at_k(k: &KPoint, pot: &Potential, basis: &PlanewaveBasis, n_bands: usize) -> Result<Vec<f64>> {
    check_bands(n_bands, basis)?;
    let fail = || Error::NumericalFailure { kx: k.k.x, ky: k.k.y };
    // Without eigenvectors the implicit QR iteration runs without an
    // iteration cap and cannot fail; non-convergence shows up as non-finite values.
    let e = if is_real(pot) {
        let h = real_hamiltonian(&k.k, pot, basis);
        sorted_lowest(h.symmetric_eigenvalues().iter().copied(), n_bands)
    } else {
        let h = build_hamiltonian(&k.k, pot, basis);
        sorted_lowest(h.symmetric_eigenvalues().iter().copied(), n_bands)
    };
    if e.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    Ok(e)
}

/// Lowest eigenpairs with unit-norm, phase-fixed coefficient vectors.
pub fn solve_at_k(k: &KPoint, pot: &Potential, basis: &PlanewaveBasis, n_bands: usize) -> Result<SpectralSolution> {
    check_bands(n_bands, basis)?;
    let h = build_hamiltonian(&k.k, pot, basis);
    let dim = h.nrows();
    let fail = || Error::NumericalFailure { kx: k.k.x, ky: k.k.y };
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if is_real(pot) {
        let eig = SymmetricEigen::try_new(h.map(|c| c.re), f64::EPSILON, 1000 * dim).ok_or_else(fail)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 1000 * dim).ok_or_else(fail)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    if values.iter().any(|e| !e.is_finite()) {
        return Err(fail());
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // A few extra pairs so that polishing cannot reorder across the cut.
    order.truncate((n_bands + 4).min(dim));
    let mut pairs: Vec<(f64, Vec<Complex64>)> = order
        .iter()
        .map(|&i| {
            let col = vectors.column(i);
            let norm = col.norm();
            let mut v: Vec<Complex64> = col.iter().map(|c| c / norm).collect();
            fix_phase(&mut v);
            (rayleigh_quotient(&h, &v), v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Within numerically degenerate clusters order by lowest supported basis index.
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= 1e-10 * pairs[end].0.abs().max(1.0) {
            end += 1;
        }
        pairs[start..end].sort_by_key(|(_, v)| lowest_support_index(v));
        start = end;
    }
    pairs.truncate(n_bands);

    let (energies, coefficients) = pairs.into_iter().unzip();
    Ok(SpectralSolution { k: *k, energies, coefficients, basis: basis.clone() })
}

/// Lowest energies at one k-point for each cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cutoff: usize,
    pub energies: Vec<f64>,
}

pub fn convergence_study(k: &KPoint, pot: &Potential, cutoffs: &[usize], n_bands: usize) -> Result<Vec<ConvergenceRow>> {
    if cutoffs.is_empty() {
        return Err(Error::invalid("at least one cutoff is required"));
    }
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("cutoffs must be strictly ascending"));
    }
    cutoffs
        .iter()
        .map(|&cutoff| {
            let basis = PlanewaveBasis::new(cutoff, pot.lattice())?;
            let sol = solve_at_k(k, pot, &basis, n_bands)?;
            Ok(ConvergenceRow { cutoff, energies: sol.energies })
        })
        .collect()
}
