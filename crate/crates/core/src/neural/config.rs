use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Training hyperparameters. Missing JSON keys take the defaults below;
/// unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub v0: f64,
    /// Lattice spacing `a`.
    pub spacing: f64,
    pub epochs: usize,
    /// Collocation points per epoch; also the number of boundary points.
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub lambda_norm: f64,
    pub lambda_bc: f64,
    /// Side of the periodic normalization grid.
    pub norm_grid: usize,
    /// Normalization k-points per epoch.
    pub n_norm_k: usize,
    pub translate_prob: f64,
    /// Reciprocal translates `m·b1 + n·b2` as `[m, n]`; must contain `[0, 0]`.
    pub translate_set: Vec<[i32; 2]>,
    pub seed: u64,
    pub adam: AdamConfig,
    pub bloch_hidden: usize,
    pub bloch_layers: usize,
    pub energy_hidden: usize,
    pub energy_layers: usize,
}

pub fn default_translate_set() -> Vec<[i32; 2]> {
    vec![[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]]
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            v0: 1.0,
            spacing: 1.0,
            epochs: 20_000,
            batch_size: 3000,
            lr0: 1e-3,
            lr_min: 0.0,
            lambda_norm: 100.0,
            lambda_bc: 10.0,
            norm_grid: 32,
            n_norm_k: 16,
            translate_prob: 0.5,
            translate_set: default_translate_set(),
            seed: 0,
            adam: AdamConfig::default(),
            bloch_hidden: 200,
            bloch_layers: 5,
            energy_hidden: 64,
            energy_layers: 3,
        }
    }
}

fn bad(key: &str, why: &str) -> Error {
    Error::InvalidArgument(format!("config key `{key}`: {why}"))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(bad(key, "must be finite")) };
        finite("v0", self.v0)?;
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(bad("spacing", "must be positive"));
        }
        for (key, v) in [
            ("batch_size", self.batch_size),
            ("norm_grid", self.norm_grid.saturating_sub(1)),
            ("n_norm_k", self.n_norm_k),
            ("bloch_hidden", self.bloch_hidden),
            ("bloch_layers", self.bloch_layers),
            ("energy_hidden", self.energy_hidden),
            ("energy_layers", self.energy_layers),
        ] {
            if v == 0 {
                let why = if key == "norm_grid" { "must be at least 2" } else { "must be positive" };
                return Err(bad(key, why));
            }
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(bad("lr0", "must be positive"));
        }
        if !(self.lr_min.is_finite() && self.lr_min >= 0.0 && self.lr_min <= self.lr0) {
            return Err(bad("lr_min", "must lie in [0, lr0]"));
        }
        for (key, v) in [("lambda_norm", self.lambda_norm), ("lambda_bc", self.lambda_bc)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(key, "must be non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.translate_prob) {
            return Err(bad("translate_prob", "must lie in [0, 1]"));
        }
        if !self.translate_set.contains(&[0, 0]) {
            return Err(bad("translate_set", "must contain [0, 0]"));
        }
        let mut seen = self.translate_set.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.translate_set.len() {
            return Err(bad("translate_set", "entries must be distinct"));
        }
        if self.translate_prob > 0.0 && self.translate_set.len() < 2 {
            return Err(bad("translate_set", "needs a nonzero translate when translate_prob > 0"));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) {
            return Err(bad("adam.beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&a.beta2) {
            return Err(bad("adam.beta2", "must lie in [0, 1)"));
        }
        if !(a.eps.is_finite() && a.eps > 0.0) {
            return Err(bad("adam.eps", "must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        TrainConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::honeycomb(self.spacing)
    }

    pub fn bloch_dims(&self) -> Vec<usize> {
        super::MlpParams::architecture(4, self.bloch_hidden, self.bloch_layers, 2)
    }

    pub fn energy_dims(&self) -> Vec<usize> {
        super::MlpParams::architecture(2, self.energy_hidden, self.energy_layers, 1)
    }

    /// Nonzero translates as Cartesian vectors.
    pub fn nonzero_translates(&self, lat: &Lattice) -> Vec<Vec2> {
        self.translate_set.iter().filter(|t| **t != [0, 0]).map(|&[m, n]| lat.reciprocal(m, n)).collect()
    }
}
