//! Noncommutative concentration inequalities in the matrix setting.
//!
//! * [`spectral`]: Hermitian eigendecompositions, spectral tails, Schatten norms.
//! * [`bounds`]: Bennett, Bernstein, Prohorov and Rosenthal-type bounds and the
//!   random-selector bounds.
//! * [`ensembles`]: random Hermitian sums, the Monte Carlo harness and exact
//!   scalar oracles.
//! * [`csfourier`]: partial-Fourier compressed sensing, RIP constants and
//!   basis pursuit.
//! * [`ldp`]: semicircular calculus, Legendre transforms and LDP upper bounds.

pub mod bounds;
pub mod csfourier;
pub mod ensembles;
pub mod error;
pub mod ldp;
pub mod quad;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
