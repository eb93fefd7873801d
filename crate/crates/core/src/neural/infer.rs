use num_complex::Complex64;

use crate::bands::{BandMetadata, BandStructure, Solver};
use crate::error::{Error, Result};
use crate::grid::{check_grid, grid_points, ComplexGrid, Grid, RealGrid};
use crate::lattice::{KPath, Lattice, Vec2};

use super::{bloch_values, energy_values, Checkpoint, MlpParams};

/// Label stored with neural band structures.
pub const BAND_ASSIGNMENT: &str = "sorted-over-translates";

/// Γ plus the six shortest reciprocal vectors.
pub fn default_translates(lat: &Lattice) -> Vec<Vec2> {
    super::default_translate_set().iter().map(|&[m, n]| lat.reciprocal(m, n)).collect()
}

/// Energy-net values at `k + G` over all translates, sorted, lowest `n_bands` kept.
pub fn nn_band_structure(ck: &Checkpoint, path: &KPath, translates: &[Vec2], n_bands: usize) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(Error::invalid("n_bands must be positive"));
    }
    if !translates.iter().any(|g| g.norm() < 1e-12) {
        return Err(Error::invalid("translates must include the zero vector"));
    }
    let mut distinct: Vec<Vec2> = Vec::new();
    for g in translates {
        if !distinct.iter().any(|d| (d - g).norm() < 1e-12) {
            distinct.push(*g);
        }
    }
    if distinct.len() < n_bands {
        return Err(Error::invalid(format!("{} distinct translates cannot supply {n_bands} bands", distinct.len())));
    }
    let ks: Vec<Vec2> = path.samples.iter().flat_map(|kp| distinct.iter().map(move |g| kp.k + g)).collect();
    let values = energy_values(&ck.energy, &ks)?;
    let energies = values
        .chunks(distinct.len())
        .map(|row| {
            let mut row = row.to_vec();
            row.sort_by(f64::total_cmp);
            row.truncate(n_bands);
            row
        })
        .collect();
    let mut metadata = BandMetadata::new(Solver::Neural, ck.config.v0);
    metadata.notes.push(("band_assignment".into(), BAND_ASSIGNMENT.into()));
    metadata.notes.push(("translates".into(), distinct.len().to_string()));
    metadata.notes.push(("epoch".into(), ck.epoch.to_string()));
    Ok(BandStructure { path: path.clone(), n_bands, energies, metadata })
}

/// Bloch-net output on the fractional `n × n` grid, same layout as the spectral grids.
pub fn nn_bloch_grid(theta: &MlpParams, k: &Vec2, n: usize, lat: &Lattice) -> Result<ComplexGrid> {
    check_grid(n)?;
    let pts: Vec<(Vec2, Vec2)> = grid_points(lat, n).into_iter().map(|x| (x, *k)).collect();
    let values: Vec<Complex64> = bloch_values(theta, &pts)?;
    Ok(Grid { n, values })
}

pub fn nn_bloch_density(ck: &Checkpoint, k: &Vec2, n: usize, lat: &Lattice) -> Result<RealGrid> {
    Ok(nn_bloch_grid(&ck.bloch, k, n, lat)?.density())
}
