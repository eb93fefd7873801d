use rand::Rng;

use crate::lattice::{Lattice, Vec2};

use super::TrainConfig;

/// Uniform points `s·a1 + t·a2`, `s, t ∈ [0, 1)`.
pub fn sample_unit_cell<R: Rng + ?Sized>(rng: &mut R, n: usize, lat: &Lattice) -> Vec<Vec2> {
    (0..n)
        .map(|_| {
            let s: f64 = rng.random();
            let t: f64 = rng.random();
            lat.from_fractional(s, t)
        })
        .collect()
}

/// Uniform points in the Γ-K-M triangle, each shifted with probability
/// `translate_prob` by a uniformly chosen nonzero translate.
pub fn sample_k<R: Rng + ?Sized>(rng: &mut R, n: usize, cfg: &TrainConfig, lat: &Lattice) -> Vec<Vec2> {
    let hs = lat.high_symmetry_points();
    let shifts = cfg.nonzero_translates(lat);
    (0..n)
        .map(|_| {
            let mut r1: f64 = rng.random();
            let mut r2: f64 = rng.random();
            if r1 + r2 > 1.0 {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            let k = hs.k * r1 + hs.m * r2;
            let u: f64 = rng.random();
            if u < cfg.translate_prob && !shifts.is_empty() {
                k + shifts[rng.random_range(0..shifts.len())]
            } else {
                k
            }
        })
        .collect()
}

/// Uniform points on the two cell edges through the origin (`s = 0` or `t = 0`).
pub fn sample_boundary<R: Rng + ?Sized>(rng: &mut R, n: usize, lat: &Lattice) -> Vec<Vec2> {
    (0..n)
        .map(|_| {
            let along: f64 = rng.random();
            if rng.random_bool(0.5) {
                lat.from_fractional(along, 0.0)
            } else {
                lat.from_fractional(0.0, along)
            }
        })
        .collect()
}

/// Everything one training epoch consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSamples {
    pub collocation: Vec<(Vec2, Vec2)>,
    pub norm_k: Vec<Vec2>,
    pub boundary: Vec<(Vec2, Vec2)>,
}

impl EpochSamples {
    /// Boundary points reuse the collocation k-values.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, cfg: &TrainConfig, lat: &Lattice) -> Self {
        let n = cfg.batch_size;
        let xs = sample_unit_cell(rng, n, lat);
        let ks = sample_k(rng, n, cfg, lat);
        let norm_k = sample_k(rng, cfg.n_norm_k, cfg, lat);
        let edge = sample_boundary(rng, n, lat);
        EpochSamples {
            collocation: xs.into_iter().zip(ks.iter().copied()).collect(),
            norm_k,
            boundary: edge.into_iter().zip(ks).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat() -> Lattice {
        Lattice::honeycomb(1.0).unwrap()
    }

    #[test]
    fn unit_cell_samples_are_fractional_unit() {
        let lat = lat();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_unit_cell(&mut rng, 100_000, &lat);
        let mut mean = 0.0;
        for p in &pts {
            let (s, t) = lat.fractional(p);
            assert!((-1e-12..1.0 + 1e-12).contains(&s) && (-1e-12..1.0 + 1e-12).contains(&t));
            mean += s;
        }
        mean /= pts.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let lat = lat();
        let cfg = TrainConfig { batch_size: 50, ..TrainConfig::default() };
        let a = EpochSamples::draw(&mut ChaCha8Rng::seed_from_u64(11), &cfg, &lat);
        let b = EpochSamples::draw(&mut ChaCha8Rng::seed_from_u64(11), &cfg, &lat);
        assert_eq!(a, b);
        let c = EpochSamples::draw(&mut ChaCha8Rng::seed_from_u64(12), &cfg, &lat);
        assert_ne!(a, c);
    }

    #[test]
    fn translate_probability_extremes() {
        let lat = lat();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let none = TrainConfig { translate_prob: 0.0, ..TrainConfig::default() };
        assert!(sample_k(&mut rng, 2000, &none, &lat).iter().all(|k| lat.in_ibz(k)));
        let all = TrainConfig { translate_prob: 1.0, ..TrainConfig::default() };
        let ks = sample_k(&mut rng, 2000, &all, &lat);
        assert!(ks.iter().all(|k| !lat.in_ibz(k)));
        for k in &ks {
            assert!(lat.in_first_bz(&lat.fold_to_bz(k)));
        }
    }

    #[test]
    fn boundary_points_lie_on_edges() {
        let lat = lat();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0usize; 2];
        for p in sample_boundary(&mut rng, 1000, &lat) {
            let (s, t) = lat.fractional(&p);
            assert!(s.abs() < 1e-12 || t.abs() < 1e-12);
            counts[usize::from(s.abs() < 1e-12)] += 1;
        }
        assert!(counts[0] > 400 && counts[1] > 400);
    }
}
