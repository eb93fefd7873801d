//! Periodic potentials stored by their Fourier coefficients on the reciprocal lattice.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{rotate_c3, Lattice, Vec2};

/// Pairwise tolerance for `V_{-K} = conj(V_K)`.
const REALNESS_TOLERANCE: f64 = 1e-14;

/// `V(x) = Σ_K V_K exp(i K·x)` with `K = m·b1 + n·b2`.
///
/// Only nonzero coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    coefficients: BTreeMap<(i32, i32), Complex64>,
    lattice: Lattice,
    v0: f64,
}

impl Potential {
    /// `V(x) = v0 Σ_{i=1..3} cos(b_i·x)` with `b3 = -(b1 + b2)`.
    pub fn three_cosine(lat: &Lattice, v0: f64) -> Self {
        let mut coefficients = BTreeMap::new();
        if v0 != 0.0 {
            for (m, n) in [(1, 0), (0, 1), (1, 1)] {
                coefficients.insert((m, n), Complex64::new(v0 / 2.0, 0.0));
                coefficients.insert((-m, -n), Complex64::new(v0 / 2.0, 0.0));
            }
        }
        Potential { coefficients, lattice: lat.clone(), v0 }
    }

    /// Builds a potential from explicit coefficients, dropping zeros and
    /// rejecting sets that do not describe a real function.
    pub fn from_coefficients(
        lat: &Lattice,
        v0: f64,
        coefficients: impl IntoIterator<Item = ((i32, i32), Complex64)>,
    ) -> Result<Self> {
        let coefficients: BTreeMap<_, _> =
            coefficients.into_iter().filter(|(_, c)| *c != Complex64::new(0.0, 0.0)).collect();
        for (&(m, n), c) in &coefficients {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::invalid(format!("coefficient ({m}, {n}) is not finite")));
            }
            let partner = coefficients.get(&(-m, -n)).copied().unwrap_or_default();
            let dev = (partner - c.conj()).norm();
            if dev > REALNESS_TOLERANCE * (1.0 + c.norm()) {
                return Err(Error::InconsistentCoefficients { imag: dev, tolerance: REALNESS_TOLERANCE });
            }
        }
        Ok(Potential { coefficients, lattice: lat.clone(), v0 })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Strength label of the standard family; metadata only.
    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn coefficients(&self) -> &BTreeMap<(i32, i32), Complex64> {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `V_K` for `K = m·b1 + n·b2`; exactly zero for unsupported modes.
    pub fn fourier_coefficient(&self, m: i32, n: i32) -> Complex64 {
        self.coefficients.get(&(m, n)).copied().unwrap_or_default()
    }

    fn series(&self, x: &Vec2) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(&(m, n), c)| c * Complex64::from_polar(1.0, self.lattice.reciprocal(m, n).dot(x)))
            .sum()
    }

    /// Real value of the Fourier series at `x`, checking that the imaginary
    /// residue is at rounding level.
    pub fn evaluate(&self, x: &Vec2) -> Result<f64> {
        let v = self.series(x);
        let tolerance = 1e-10 * (1.0 + self.coefficients.values().map(|c| c.norm()).sum::<f64>());
        if v.im.abs() >= tolerance {
            return Err(Error::InconsistentCoefficients { imag: v.im.abs(), tolerance });
        }
        Ok(v.re)
    }

    /// Real part of the series without the realness check; for hot loops over
    /// potentials that were validated on construction.
    pub fn value(&self, x: &Vec2) -> f64 {
        self.coefficients
            .iter()
            .map(|(&(m, n), c)| {
                let (s, co) = self.lattice.reciprocal(m, n).dot(x).sin_cos();
                c.re * co - c.im * s
            })
            .sum()
    }

    /// Seeded sampling check of periodicity, inversion symmetry and C3 invariance.
    pub fn verify_honeycomb_symmetry(&self, n_samples: usize, seed: u64) -> Result<SymmetryReport> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = &self.lattice;
        let (mut dev_p, mut dev_i, mut dev_r, mut vmax) = (0f64, 0f64, 0f64, 0f64);
        for _ in 0..n_samples {
            let x = lat.from_fractional(rng.random::<f64>(), rng.random::<f64>());
            let v = self.evaluate(&x)?;
            vmax = vmax.max(v.abs());
            for a in [lat.a1, lat.a2] {
                dev_p = dev_p.max((self.evaluate(&(x + a))? - v).abs());
            }
            dev_i = dev_i.max((self.evaluate(&-x)? - v).abs());
            dev_r = dev_r.max((self.evaluate(&rotate_c3(&x))? - v).abs());
        }
        let tol = 1e-9 * (1.0 + vmax);
        Ok(SymmetryReport {
            periodic: dev_p < tol,
            inversion: dev_i < tol,
            c3: dev_r < tol,
            max_deviation: dev_p.max(dev_i).max(dev_r),
        })
    }

    /// `(x, y, V)` on the fractional grid `x = (i/n)·a1 + (j/n)·a2`, row-major in `i`.
    pub fn sample_grid(&self, n: usize) -> Result<Vec<[f64; 3]>> {
        if n == 0 {
            return Err(Error::invalid("grid size must be at least 1"));
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = self.lattice.from_fractional(i as f64 / n as f64, j as f64 / n as f64);
                out.push([x.x, x.y, self.evaluate(&x)?]);
            }
        }
        Ok(out)
    }

    pub fn to_file(&self) -> PotentialFile {
        PotentialFile {
            v0: self.v0,
            spacing: self.lattice.spacing,
            coefficients: self
                .coefficients
                .iter()
                .map(|(&(m, n), c)| CoefficientEntry { m, n, re: c.re, im: c.im })
                .collect(),
        }
    }

    /// Rebuilds a potential on the honeycomb lattice named by the file.
    pub fn from_file(file: &PotentialFile) -> Result<Self> {
        let lat = Lattice::honeycomb(file.spacing)?;
        Potential::from_coefficients(
            &lat,
            file.v0,
            file.coefficients.iter().map(|e| ((e.m, e.n), Complex64::new(e.re, e.im))),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub periodic: bool,
    pub inversion: bool,
    pub c3: bool,
    pub max_deviation: f64,
}

/// JSON layout of a serialized potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub v0: f64,
    pub spacing: f64,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub m: i32,
    pub n: i32,
    pub re: f64,
    pub im: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Lattice {
        Lattice::honeycomb(1.0).unwrap()
    }

    /// `(1/|Ω|) ∫ V e^{-iK·x}` by the periodic rectangle rule on a `g × g` grid.
    fn quadrature(pot: &Potential, m: i32, n: i32, g: usize) -> Complex64 {
        let lat = pot.lattice();
        let kv = lat.reciprocal(m, n);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..g {
            for j in 0..g {
                let x = lat.from_fractional(i as f64 / g as f64, j as f64 / g as f64);
                acc += pot.evaluate(&x).unwrap() * Complex64::from_polar(1.0, -kv.dot(&x));
            }
        }
        acc / (g * g) as f64
    }

    #[test]
    fn three_cosine_coefficients() {
        let l = lat();
        assert!(Potential::three_cosine(&l, 0.0).is_zero());
        let p = Potential::three_cosine(&l, 1.0);
        assert_eq!(p.fourier_coefficient(1, 0), Complex64::new(0.5, 0.0));
        assert_eq!(p.fourier_coefficient(-1, 0), Complex64::new(0.5, 0.0));
        assert_eq!(p.fourier_coefficient(-1, -1), Complex64::new(0.5, 0.0));
        assert_eq!(p.fourier_coefficient(5, 5), Complex64::new(0.0, 0.0));
        let p10 = Potential::three_cosine(&l, 10.0);
        assert_eq!(p10.coefficients().len(), 6);
        assert!(p10.coefficients().values().all(|c| *c == Complex64::new(5.0, 0.0)));
    }

    #[test]
    fn values_at_origin() {
        let l = lat();
        assert_eq!(Potential::three_cosine(&l, 1.0).evaluate(&Vec2::zeros()).unwrap(), 3.0);
        assert_eq!(Potential::three_cosine(&l, 2.0).evaluate(&Vec2::zeros()).unwrap(), 6.0);
    }

    #[test]
    fn periodic_under_lattice_translations() {
        let l = lat();
        let p = Potential::three_cosine(&l, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let v = p.evaluate(&x).unwrap();
            for c1 in -3..=3 {
                for c2 in -3..=3 {
                    let y = x + l.a1 * c1 as f64 + l.a2 * c2 as f64;
                    let w = p.evaluate(&y).unwrap();
                    assert!((w - v).abs() <= 1e-9 * (1.0 + v.abs()), "{v} vs {w}");
                }
            }
        }
    }

    #[test]
    fn quadrature_recovers_coefficients() {
        let p = Potential::three_cosine(&lat(), 1.0);
        for m in -3..=3 {
            for n in -3..=3 {
                let q = quadrature(&p, m, n, 64);
                assert!((q - p.fourier_coefficient(m, n)).norm() < 1e-10, "({m},{n}): {q}");
            }
        }
    }

    #[test]
    fn coefficients_scale_linearly() {
        let l = lat();
        let a = Potential::three_cosine(&l, 1.5);
        let b = Potential::three_cosine(&l, 3.0);
        for (k, c) in a.coefficients() {
            assert_eq!(b.coefficients()[k], *c * 2.0);
        }
    }

    #[test]
    fn symmetry_report() {
        let l = lat();
        for v0 in [0.0, 1.0, 10.0] {
            let r = Potential::three_cosine(&l, v0).verify_honeycomb_symmetry(200, 1).unwrap();
            assert!(r.periodic && r.inversion && r.c3, "v0 = {v0}: {r:?}");
        }
        let half = Complex64::new(0.5, 0.0);
        let one_wave = Potential::from_coefficients(&l, 1.0, [((1, 0), half), ((-1, 0), half)]).unwrap();
        let r = one_wave.verify_honeycomb_symmetry(200, 1).unwrap();
        assert!(r.periodic && r.inversion);
        assert!(!r.c3);
    }

    #[test]
    fn rejects_non_real_coefficient_sets() {
        let l = lat();
        let err = Potential::from_coefficients(&l, 1.0, [((1, 0), Complex64::new(0.5, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::InconsistentCoefficients { .. }));
        let ok = Potential::from_coefficients(
            &l,
            1.0,
            [((1, 0), Complex64::new(0.5, 0.25)), ((-1, 0), Complex64::new(0.5, -0.25)), ((2, 2), Complex64::new(0.0, 0.0))],
        )
        .unwrap();
        assert_eq!(ok.coefficients().len(), 2);
    }

    #[test]
    fn evaluate_flags_imaginary_residue() {
        let l = lat();
        let mut coefficients = BTreeMap::new();
        coefficients.insert((1, 0), Complex64::new(0.5, 0.0));
        let p = Potential { coefficients, lattice: l, v0: 1.0 };
        let x = Vec2::new(0.1, 0.05);
        assert!(matches!(p.evaluate(&x), Err(Error::InconsistentCoefficients { .. })));
    }

    #[test]
    fn unchecked_value_matches_evaluate() {
        let p = Potential::three_cosine(&lat(), 10.0);
        let x = Vec2::new(0.31, -0.2);
        assert!((p.value(&x) - p.evaluate(&x).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn json_round_trip() {
        let p = Potential::three_cosine(&lat(), 4.0);
        let text = serde_json::to_string(&p.to_file()).unwrap();
        let back = Potential::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
