//! Samples on the fractional unit-cell grid `x_ij = (i/n)·a1 + (j/n)·a2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Vec2};

/// Row-major `n × n` samples, index `i * n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub n: usize,
    pub values: Vec<T>,
}

pub type RealGrid = Grid<f64>;
pub type ComplexGrid = Grid<Complex64>;

impl<T> Grid<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Grid { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.values[i * self.n + j]
    }
}

impl Grid<f64> {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl Grid<Complex64> {
    pub fn density(&self) -> RealGrid {
        Grid { n: self.n, values: self.values.iter().map(|c| c.norm_sqr()).collect() }
    }
}

/// Cartesian position of grid node `(i, j)`.
pub fn grid_point(lat: &Lattice, n: usize, i: usize, j: usize) -> Vec2 {
    lat.from_fractional(i as f64 / n as f64, j as f64 / n as f64)
}

/// All grid nodes in row-major order.
pub fn grid_points(lat: &Lattice, n: usize) -> Vec<Vec2> {
    Grid::from_fn(n, |i, j| grid_point(lat, n, i, j)).values
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("grid size must be at least 2, got {n}")));
    }
    Ok(())
}
