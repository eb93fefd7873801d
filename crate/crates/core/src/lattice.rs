//! Real and reciprocal lattices, high-symmetry points and k-paths.
//!
//! The honeycomb potential lives on a triangular Bravais lattice. With spacing `a`:
//!
//! ```text
//! a1 = a (√3/2,  1/2)      b1 = q (1/2,  √3/2)
//! a2 = a (√3/2, -1/2)      b2 = q (1/2, -√3/2)      q = 4π / (a√3)
//! ```
//!
//! so that `b_i · a_j = 2π δ_ij`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Barycentric tolerance used by [`Lattice::in_ibz`].
pub const IBZ_TOLERANCE: f64 = 1e-12;

/// Counterclockwise rotation of `v` by `angle` radians.
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// The threefold rotation `R` leaving honeycomb potentials invariant.
pub fn rotate_c3(v: &Vec2) -> Vec2 {
    rotate(v, 2.0 * PI / 3.0)
}

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Dual basis satisfying `b_i · a_j = 2π δ_ij`.
pub fn reciprocal_basis(a1: &Vec2, a2: &Vec2) -> Result<(Vec2, Vec2)> {
    let det = cross(a1, a2);
    if !(det.abs() > 1e-12 * a1.norm() * a2.norm()) {
        return Err(Error::SingularLattice { det });
    }
    let scale = 2.0 * PI / det;
    let b1 = Vec2::new(a2.y, -a2.x) * scale;
    let b2 = Vec2::new(-a1.y, a1.x) * scale;
    Ok((b1, b2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub a1: Vec2,
    pub a2: Vec2,
    pub b1: Vec2,
    pub b2: Vec2,
    /// Lattice spacing `a` (`|a1|` for a generic basis).
    pub spacing: f64,
    pub cell_area: f64,
}

impl Lattice {
    /// Triangular Bravais lattice underlying the honeycomb structure.
    pub fn honeycomb(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("lattice spacing must be positive, got {a}")));
        }
        let s3 = 3f64.sqrt();
        let q = 4.0 * PI / (a * s3);
        Ok(Lattice {
            a1: Vec2::new(a * s3 / 2.0, a / 2.0),
            a2: Vec2::new(a * s3 / 2.0, -a / 2.0),
            b1: Vec2::new(q / 2.0, q * s3 / 2.0),
            b2: Vec2::new(q / 2.0, -q * s3 / 2.0),
            spacing: a,
            cell_area: a * a * s3 / 2.0,
        })
    }

    /// Lattice from an arbitrary real-space basis.
    pub fn from_basis(a1: Vec2, a2: Vec2) -> Result<Self> {
        let (b1, b2) = reciprocal_basis(&a1, &a2)?;
        Ok(Lattice { a1, a2, b1, b2, spacing: a1.norm(), cell_area: cross(&a1, &a2).abs() })
    }

    /// `|b1|`; equals `4π/(a√3)` for the honeycomb lattice.
    pub fn q(&self) -> f64 {
        self.b1.norm()
    }

    /// Reciprocal lattice vector `m·b1 + n·b2`.
    pub fn reciprocal(&self, m: i32, n: i32) -> Vec2 {
        self.b1 * m as f64 + self.b2 * n as f64
    }

    /// Real-space point `s·a1 + t·a2`.
    pub fn from_fractional(&self, s: f64, t: f64) -> Vec2 {
        self.a1 * s + self.a2 * t
    }

    /// Fractional coordinates `(s, t)` with `x = s·a1 + t·a2`.
    pub fn fractional(&self, x: &Vec2) -> (f64, f64) {
        (x.dot(&self.b1) / (2.0 * PI), x.dot(&self.b2) / (2.0 * PI))
    }

    pub fn high_symmetry_points(&self) -> HighSymmetryPoints {
        HighSymmetryPoints {
            gamma: Vec2::zeros(),
            k: (self.b1 * 2.0 + self.b2) / 3.0,
            kprime: (self.b1 + self.b2 * 2.0) / 3.0,
            m: (self.b1 + self.b2) / 2.0,
        }
    }

    pub fn point(&self, label: KLabel) -> KPoint {
        KPoint::labeled(self.high_symmetry_points().get(label), label)
    }

    /// Closed Γ-K-M triangle membership.
    pub fn in_ibz(&self, k: &Vec2) -> bool {
        let hs = self.high_symmetry_points();
        let e1 = hs.k - hs.gamma;
        let e2 = hs.m - hs.gamma;
        let d = k - hs.gamma;
        let m = Matrix2::new(e1.x, e2.x, e1.y, e2.y);
        let Some(inv) = m.try_inverse() else {
            return false;
        };
        let l = inv * d;
        l.x >= -IBZ_TOLERANCE && l.y >= -IBZ_TOLERANCE && l.x + l.y <= 1.0 + IBZ_TOLERANCE
    }

    /// Nearest reciprocal lattice point to `k` as integer coordinates.
    ///
    /// Ties on Voronoi boundaries go to the lexicographically smallest `(m, n)`.
    pub fn nearest_reciprocal(&self, k: &Vec2) -> (i32, i32) {
        let (f1, f2) = (k.dot(&self.a1) / (2.0 * PI), k.dot(&self.a2) / (2.0 * PI));
        let (m0, n0) = (f1.round() as i32, f2.round() as i32);
        let mut best = (0, 0);
        let mut best_d = f64::INFINITY;
        for m in m0 - 2..=m0 + 2 {
            for n in n0 - 2..=n0 + 2 {
                let d = (k - self.reciprocal(m, n)).norm_squared();
                if d < best_d - 1e-12 * (1.0 + best_d.min(d)) {
                    best_d = d;
                    best = (m, n);
                }
            }
        }
        best
    }

    /// Translate `k` into the first Brillouin zone.
    pub fn fold_to_bz(&self, k: &Vec2) -> Vec2 {
        match self.nearest_reciprocal(k) {
            (0, 0) => *k,
            (m, n) => k - self.reciprocal(m, n),
        }
    }

    /// Whether `k` is at least as close to Γ as to any other reciprocal lattice point.
    pub fn in_first_bz(&self, k: &Vec2) -> bool {
        let d0 = k.norm_squared();
        (-2..=2).all(|m| {
            (-2..=2).all(|n| d0 <= (k - self.reciprocal(m, n)).norm_squared() + 1e-12 * (1.0 + d0))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighSymmetryPoints {
    pub gamma: Vec2,
    pub k: Vec2,
    pub kprime: Vec2,
    pub m: Vec2,
}

impl HighSymmetryPoints {
    pub fn get(&self, label: KLabel) -> Vec2 {
        match label {
            KLabel::Gamma => self.gamma,
            KLabel::K => self.k,
            KLabel::KPrime => self.kprime,
            KLabel::M => self.m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KLabel {
    Gamma,
    K,
    KPrime,
    M,
}

impl KLabel {
    /// Parse a compact path such as `GKMG` (`K'` or `P` for K′).
    pub fn parse_path(path: &str) -> Result<Vec<KLabel>> {
        let mut out = Vec::new();
        let mut chars = path.trim().chars().peekable();
        while let Some(c) = chars.next() {
            let label = match c.to_ascii_uppercase() {
                'G' => KLabel::Gamma,
                'M' => KLabel::M,
                'P' => KLabel::KPrime,
                'K' => {
                    if chars.peek() == Some(&'\'') {
                        chars.next();
                        KLabel::KPrime
                    } else {
                        KLabel::K
                    }
                }
                other => return Err(Error::invalid(format!("unknown k-point label '{other}' in path '{path}'"))),
            };
            out.push(label);
        }
        Ok(out)
    }
}

impl fmt::Display for KLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KLabel::Gamma => "G",
            KLabel::K => "K",
            KLabel::KPrime => "K'",
            KLabel::M => "M",
        })
    }
}

impl FromStr for KLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G" | "g" | "Gamma" | "gamma" | "Γ" => Ok(KLabel::Gamma),
            "K" | "k" => Ok(KLabel::K),
            "K'" | "k'" | "Kprime" | "kprime" | "P" => Ok(KLabel::KPrime),
            "M" | "m" => Ok(KLabel::M),
            other => Err(Error::invalid(format!("unknown k-point label '{other}'"))),
        }
    }
}

/// A quasi-momentum, optionally tagged with its high-symmetry label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPoint {
    pub k: Vec2,
    pub label: Option<KLabel>,
}

impl KPoint {
    pub fn new(k: Vec2) -> Self {
        KPoint { k, label: None }
    }

    pub fn labeled(k: Vec2, label: KLabel) -> Self {
        KPoint { k, label: Some(label) }
    }
}

impl From<Vec2> for KPoint {
    fn from(k: Vec2) -> Self {
        KPoint::new(k)
    }
}

/// Piecewise-linear path through high-symmetry points.
#[derive(Clone, Debug, PartialEq)]
pub struct KPath {
    pub waypoints: Vec<KPoint>,
    pub samples: Vec<KPoint>,
    /// Cumulative arc length in k-space, one entry per sample.
    pub s: Vec<f64>,
    pub n_per_segment: usize,
}

impl KPath {
    pub fn build(points: &[KLabel], n_per_segment: usize, lat: &Lattice) -> Result<Self> {
        if n_per_segment == 0 {
            return Err(Error::invalid("n_per_segment must be at least 1"));
        }
        if points.len() < 2 {
            return Err(Error::invalid("a k-path needs at least two waypoints"));
        }
        let waypoints: Vec<KPoint> = points.iter().map(|&l| lat.point(l)).collect();
        let mut samples = Vec::with_capacity((points.len() - 1) * n_per_segment + 1);
        let mut s = Vec::with_capacity(samples.capacity());
        let mut s0 = 0.0;
        for pair in waypoints.windows(2) {
            let (from, to) = (pair[0], pair[1]);
            let len = (to.k - from.k).norm();
            if !(len > 0.0) {
                return Err(Error::invalid("consecutive k-path waypoints must differ"));
            }
            for j in 0..n_per_segment {
                let t = j as f64 / n_per_segment as f64;
                let label = if j == 0 { from.label } else { None };
                samples.push(KPoint { k: from.k + (to.k - from.k) * t, label });
                s.push(s0 + len * t);
            }
            s0 += len;
        }
        let last = *waypoints.last().expect("at least two waypoints");
        samples.push(last);
        s.push(s0);
        Ok(KPath { waypoints, samples, s, n_per_segment })
    }

    /// Path from a compact label string such as `GKMG`.
    pub fn from_spec(path: &str, n_per_segment: usize, lat: &Lattice) -> Result<Self> {
        KPath::build(&KLabel::parse_path(path)?, n_per_segment, lat)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.s.last().copied().unwrap_or(0.0)
    }

    pub fn label_string(&self) -> String {
        self.waypoints.iter().filter_map(|w| w.label).map(|l| l.to_string()).collect()
    }
}
