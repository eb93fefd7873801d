//! Cross-checks between the neural and spectral solutions.
//!
//! Energies are compared band by band after both sides are sorted. Modes are
//! compared through the gauge-invariant overlap
//! `|⟨a, b⟩|² / (⟨a, a⟩⟨b, b⟩)`, and against the whole eigenspace when the
//! spectral level is degenerate, since a single vector of a degenerate pair is
//! only defined up to a unitary rotation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::BandStructure;
use crate::error::{Error, Result};
use crate::grid::ComplexGrid;
use crate::lattice::{KPoint, Lattice, Vec2};
use crate::neural::{bloch_values, energy_values, Checkpoint};
use crate::potential::Potential;
use crate::spectral::{solve_at_k, PlanewaveBasis};

/// Levels closer than this (relative to `max(1, |E|)`) form one eigenspace.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandError {
    pub band: usize,
    pub rmse: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOverlap {
    pub s: f64,
    pub kx: f64,
    pub ky: f64,
    /// Dimension of the spectral eigenspace the mode was projected on.
    pub subspace_dim: usize,
    pub overlap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub checkpoint: Option<String>,
    pub cutoff: Option<usize>,
    pub v0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub path: String,
    pub n_samples: usize,
    pub n_bands: usize,
    pub bands: Vec<BandError>,
    pub overlaps: Vec<ModeOverlap>,
    pub provenance: Provenance,
}

/// Per-band RMSE and maximum absolute error.
pub fn compare_bands(nn: &BandStructure, sp: &BandStructure) -> Result<ComparisonReport> {
    if nn.n_bands != sp.n_bands {
        return Err(Error::invalid(format!("band counts differ: {} vs {}", nn.n_bands, sp.n_bands)));
    }
    let same_path = nn.path.samples.len() == sp.path.samples.len()
        && nn.path.samples.iter().zip(&sp.path.samples).all(|(a, b)| (a.k - b.k).norm() <= 1e-12 * (1.0 + b.k.norm()));
    if !same_path {
        return Err(Error::invalid("band structures were sampled on different k-paths"));
    }
    let sorted = |row: &Vec<f64>| {
        let mut r = row.clone();
        r.sort_by(f64::total_cmp);
        r
    };
    let a: Vec<Vec<f64>> = nn.energies.iter().map(sorted).collect();
    let b: Vec<Vec<f64>> = sp.energies.iter().map(sorted).collect();
    let n = a.len().max(1) as f64;
    let bands = (0..nn.n_bands)
        .map(|band| {
            let (mut sq, mut max_abs) = (0.0, 0.0f64);
            for (ra, rb) in a.iter().zip(&b) {
                let d = (ra[band] - rb[band]).abs();
                sq += d * d;
                max_abs = max_abs.max(d);
            }
            BandError { band, rmse: (sq / n).sqrt().min(max_abs), max_abs }
        })
        .collect();
    Ok(ComparisonReport {
        path: sp.path.label_string(),
        n_samples: sp.path.len(),
        n_bands: sp.n_bands,
        bands,
        overlaps: Vec::new(),
        provenance: Provenance {
            checkpoint: nn.metadata.checkpoint.clone(),
            cutoff: sp.metadata.cutoff,
            v0: sp.metadata.v0,
        },
    })
}

/// Cell-area-weighted inner product `⟨a, b⟩ = (A/n²) Σ conj(a)·b`.
pub fn grid_inner(a: &ComplexGrid, b: &ComplexGrid, lat: &Lattice) -> Result<Complex64> {
    if a.n != b.n || a.values.len() != b.values.len() {
        return Err(Error::invalid(format!("grid shapes differ: {} vs {}", a.n, b.n)));
    }
    let w = lat.cell_area / a.values.len() as f64;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum::<Complex64>() * w)
}

fn norm_sq(a: &ComplexGrid, lat: &Lattice, what: &str) -> Result<f64> {
    let n = grid_inner(a, a, lat)?.re;
    if !(n > 0.0) {
        return Err(Error::DegenerateMode(format!("{what} has zero norm")));
    }
    Ok(n)
}

/// Phase-invariant overlap in `[0, 1]`.
pub fn mode_overlap(nn: &ComplexGrid, sp: &ComplexGrid, lat: &Lattice) -> Result<f64> {
    let ip = grid_inner(nn, sp, lat)?;
    Ok(ip.norm_sqr() / (norm_sq(nn, lat, "first mode")? * norm_sq(sp, lat, "second mode")?))
}

/// Squared norm of the projection of `nn` onto the span of `basis`, relative
/// to `⟨nn, nn⟩`. The basis is orthonormalized first, so any spanning set of
/// the eigenspace gives the same value.
pub fn subspace_overlap(nn: &ComplexGrid, basis: &[ComplexGrid], lat: &Lattice) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::invalid("subspace basis is empty"));
    }
    let mut ortho: Vec<ComplexGrid> = Vec::with_capacity(basis.len());
    for v in basis {
        let mut w = v.clone();
        for e in &ortho {
            let c = grid_inner(e, &w, lat)?;
            for (wi, ei) in w.values.iter_mut().zip(&e.values) {
                *wi -= c * ei;
            }
        }
        let n = norm_sq(&w, lat, "subspace vector")?.sqrt();
        w.values.iter_mut().for_each(|x| *x /= n);
        ortho.push(w);
    }
    let total = norm_sq(nn, lat, "neural mode")?;
    let mut proj = 0.0;
    for e in &ortho {
        proj += grid_inner(e, nn, lat)?.norm_sqr();
    }
    Ok(proj / total)
}

/// Neural band-0 mode at `k`, mapped back to the periodic gauge of `k`.
///
/// Band 0 comes from the translate `G` minimizing `E(k + G)`; the network mode
/// there equals `e^{-iG·x}` times the mode at `k`, which is undone here.
pub fn nn_band0_grid(ck: &Checkpoint, k: &Vec2, translates: &[Vec2], n: usize, lat: &Lattice) -> Result<ComplexGrid> {
    if translates.is_empty() {
        return Err(Error::invalid("translates must not be empty"));
    }
    let shifted: Vec<Vec2> = translates.iter().map(|g| k + g).collect();
    let e = energy_values(&ck.energy, &shifted)?;
    let best = (0..e.len()).min_by(|&i, &j| e[i].total_cmp(&e[j])).expect("non-empty");
    let g = translates[best];
    crate::grid::check_grid(n)?;
    let xs = crate::grid::grid_points(lat, n);
    let pts: Vec<(Vec2, Vec2)> = xs.iter().map(|x| (*x, shifted[best])).collect();
    let u = bloch_values(&ck.bloch, &pts)?;
    let values = u.iter().zip(&xs).map(|(u, x)| u * Complex64::from_polar(1.0, g.dot(x))).collect();
    Ok(ComplexGrid { n, values })
}

/// Overlap of the neural band-0 mode at `k` with the spectral eigenspace of band 0.
pub fn band0_overlap(
    ck: &Checkpoint,
    pot: &Potential,
    basis: &PlanewaveBasis,
    k: &Vec2,
    translates: &[Vec2],
    n: usize,
) -> Result<(f64, usize)> {
    let lat = pot.lattice();
    let sol = solve_at_k(&KPoint::new(*k), pot, basis, 4.min(basis.len()))?;
    let e0 = sol.energies[0];
    let dim = sol.energies.iter().take_while(|e| (*e - e0).abs() <= DEGENERACY_TOLERANCE * e0.abs().max(1.0)).count();
    let space = (0..dim).map(|b| sol.bloch_grid(b, n)).collect::<Result<Vec<_>>>()?;
    let nn = nn_band0_grid(ck, k, translates, n, lat)?;
    Ok((subspace_overlap(&nn, &space, lat)?, dim))
}

/// Band-0 overlaps at every sample of the report's path.
pub fn path_overlaps(
    ck: &Checkpoint,
    pot: &Potential,
    basis: &PlanewaveBasis,
    sp: &BandStructure,
    translates: &[Vec2],
    n: usize,
) -> Result<Vec<ModeOverlap>> {
    sp.path
        .samples
        .par_iter()
        .zip(sp.path.s.par_iter())
        .map(|(kp, s)| {
            let (overlap, subspace_dim) = band0_overlap(ck, pot, basis, &kp.k, translates, n)?;
            Ok(ModeOverlap { s: *s, kx: kp.k.x, ky: kp.k.y, subspace_dim, overlap })
        })
        .collect()
}
