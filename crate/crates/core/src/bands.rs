//! Band structures along k-paths, Dirac-point diagnostics and gaps.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{KLabel, KPath, KPoint, Lattice, Vec2};
use crate::potential::Potential;
use crate::spectral::{energies_at_k, PlanewaveBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Spectral,
    Neural,
    Free,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Spectral => "spectral",
            Solver::Neural => "neural",
            Solver::Free => "free",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandMetadata {
    pub solver: Solver,
    pub v0: f64,
    pub cutoff: Option<usize>,
    pub checkpoint: Option<String>,
    /// Free-form `key=value` notes carried into file headers.
    pub notes: Vec<(String, String)>,
}

impl BandMetadata {
    pub fn new(solver: Solver, v0: f64) -> Self {
        BandMetadata { solver, v0, cutoff: None, checkpoint: None, notes: Vec::new() }
    }
}

/// Lowest `n_bands` energies at every sample of a k-path; rows ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure {
    pub path: KPath,
    pub n_bands: usize,
    pub energies: Vec<Vec<f64>>,
    pub metadata: BandMetadata,
}

impl BandStructure {
    pub fn band(&self, b: usize) -> impl Iterator<Item = f64> + '_ {
        self.energies.iter().map(move |row| row[b])
    }
}

pub fn band_structure_spectral(
    pot: &Potential,
    path: &KPath,
    n_bands: usize,
    basis: &PlanewaveBasis,
) -> Result<BandStructure> {
    // Independent solves; collect preserves path order.
    let energies = path
        .samples
        .par_iter()
        .map(|k| energies_at_k(k, pot, basis, n_bands))
        .collect::<Result<Vec<_>>>()?;
    let mut metadata = BandMetadata::new(Solver::Spectral, pot.v0());
    metadata.cutoff = Some(basis.cutoff());
    Ok(BandStructure { path: path.clone(), n_bands, energies, metadata })
}

/// Lowest `n` values of `½|k + Q|²` over all reciprocal vectors `Q`.
pub fn free_particle_energies(k: &Vec2, n: usize, lat: &Lattice) -> Vec<f64> {
    let shell = |r: i32| {
        let mut e: Vec<f64> = (-r..=r)
            .flat_map(|m| (-r..=r).map(move |nn| (m, nn)))
            .map(|(m, nn)| 0.5 * (k + lat.reciprocal(m, nn)).norm_squared())
            .collect();
        e.sort_by(f64::total_cmp);
        e.truncate(n);
        e
    };
    let mut r = 1;
    while ((2 * r + 1) * (2 * r + 1)) < n as i32 {
        r += 1;
    }
    let mut current = shell(r);
    loop {
        let next = shell(r + 1);
        if next == current {
            return current;
        }
        current = next;
        r += 1;
    }
}

pub fn free_particle_bands(path: &KPath, n_bands: usize, lat: &Lattice) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(Error::invalid("n_bands must be positive"));
    }
    let energies = path.samples.iter().map(|k| free_particle_energies(&k.k, n_bands, lat)).collect();
    Ok(BandStructure { path: path.clone(), n_bands, energies, metadata: BandMetadata::new(Solver::Free, 0.0) })
}

/// Probe directions for the cone fit, in degrees from the x axis.
pub const DIRAC_PROBE_ANGLES: [f64; 3] = [0.0, 40.0, 80.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracReport {
    pub k_point: [f64; 2],
    /// Band indices forming the Dirac pair.
    pub pair: [usize; 2],
    /// `E1 - E0` at K.
    pub splitting: f64,
    /// `E2 - E1` at K.
    pub third_gap: f64,
    /// Midpoint of the pair at K.
    pub dirac_energy: f64,
    /// Mean fitted cone slope.
    pub velocity: f64,
    /// Slope along each probe direction.
    pub velocities: Vec<f64>,
    /// Largest RMS residual among the per-direction fits.
    pub linear_fit_residual: f64,
    pub delta: f64,
    pub n_fit: usize,
    pub cutoff: usize,
    pub v0: f64,
}

impl DiracReport {
    /// Spread of the per-direction slopes relative to their mean.
    pub fn anisotropy(&self) -> f64 {
        let max = self.velocities.iter().copied().fold(f64::MIN, f64::max);
        let min = self.velocities.iter().copied().fold(f64::MAX, f64::min);
        (max - min) / self.velocity
    }
}

/// Default probe offset `1e-2·|K|`.
pub fn default_dirac_delta(lat: &Lattice) -> f64 {
    1e-2 * lat.high_symmetry_points().k.norm()
}

/// Degeneracy and cone slope of bands 0 and 1 at K.
///
/// Each direction `d` is probed on both sides of K, `t = ±delta·j/n_fit` for
/// `j = 1..=n_fit`, and the slope is the least-squares fit through the origin
/// of `E1(K + t·d) - E_D` against `|t|`. The trigonal-warping term of the cone
/// is odd in `t` and drops out of the slope.
pub fn dirac_report(pot: &Potential, basis: &PlanewaveBasis, delta: f64, n_fit: usize) -> Result<DiracReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if n_fit < 3 {
        return Err(Error::invalid(format!("n_fit must be at least 3, got {n_fit}")));
    }
    let lat = pot.lattice();
    let k = lat.point(KLabel::K);
    let e = energies_at_k(&k, pot, basis, 3)?;
    let dirac_energy = 0.5 * (e[0] + e[1]);

    let mut velocities = Vec::with_capacity(DIRAC_PROBE_ANGLES.len());
    let mut worst_residual = 0.0f64;
    for angle in DIRAC_PROBE_ANGLES {
        let dir = Vec2::new((angle * PI / 180.0).cos(), (angle * PI / 180.0).sin());
        let mut samples = Vec::with_capacity(2 * n_fit);
        for j in 1..=n_fit {
            let t = delta * j as f64 / n_fit as f64;
            for side in [t, -t] {
                let e = energies_at_k(&KPoint::new(k.k + dir * side), pot, basis, 2)?;
                samples.push((t, e[1] - dirac_energy));
            }
        }
        let stt: f64 = samples.iter().map(|(t, _)| t * t).sum();
        let sty: f64 = samples.iter().map(|(t, y)| t * y).sum();
        let slope = sty / stt;
        let rms = (samples.iter().map(|(t, y)| (y - slope * t).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
        worst_residual = worst_residual.max(rms);
        velocities.push(slope);
    }
    let velocity = velocities.iter().sum::<f64>() / velocities.len() as f64;

    Ok(DiracReport {
        k_point: [k.k.x, k.k.y],
        pair: [0, 1],
        splitting: (e[1] - e[0]).max(0.0),
        third_gap: (e[2] - e[1]).max(0.0),
        dirac_energy,
        velocity,
        velocities,
        linear_fit_residual: worst_residual,
        delta,
        n_fit,
        cutoff: basis.cutoff(),
        v0: pot.v0(),
    })
}

/// Minimum over the sampled path of `E_{lower+1} - E_lower`, clamped at zero.
pub fn band_gap(bs: &BandStructure, lower_band: usize) -> Result<f64> {
    if lower_band + 1 >= bs.n_bands {
        return Err(Error::invalid(format!(
            "band gap above band {lower_band} needs at least {} bands, have {}",
            lower_band + 2,
            bs.n_bands
        )));
    }
    let gap = bs.energies.iter().map(|row| row[lower_band + 1] - row[lower_band]).fold(f64::INFINITY, f64::min);
    Ok(gap.max(0.0))
}
