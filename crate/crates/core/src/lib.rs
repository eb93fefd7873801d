//! Floquet-Bloch band structures for two-dimensional honeycomb lattice potentials.
//!
//! Two independent solvers are provided and cross-checked against each other:
//!
//! * [`spectral`]: a truncated plane-wave expansion of the Bloch Hamiltonian,
//!   diagonalized densely. This is the reference.
//! * [`neural`]: an unsupervised physics-informed solver in which one network
//!   represents the periodic Bloch factor `u(x, k)` and another the energy
//!   `E(k)`, trained on the Schrödinger residual plus normalization and
//!   periodicity penalties.
//!
//! Units are fixed with `ħ = m = 1`, so the kinetic operator is `-½∇²`.

pub mod bands;
pub mod error;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod neural;
pub mod potential;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
pub use lattice::{KLabel, KPath, KPoint, Lattice, Vec2};
pub use num_complex::Complex64;
pub use potential::Potential;
