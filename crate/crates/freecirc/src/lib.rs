//! Computational engine for operator-valued circular elements whose
//! coefficient algebra is the step functions on `[0,1]`.
//!
//! A circular element `z` over the algebra `D` of step functions is
//! determined by a pair of covariance maps `(α, β)` with
//! `α(b) = E(z* b z)` and `β(b) = E(z b z*)`, both induced by a block
//! density `H` on `[0,1]²`.  Everything here is built on top of that picture:
//!
//! - [`nc_partitions`]: non-crossing pair partitions, the index set of the
//!   Gaussian moment expansion.
//! - [`step_algebra`]: step functions, block densities and the covariance
//!   pair with its algebraic operations.
//! - [`moment_engine`]: exact `D`-valued *-moments via an interval dynamic
//!   program, with a brute-force pairing sum as independent oracle.
//! - [`transforms`]: Cauchy- and R-transforms of `z*cz`, fixed-point and
//!   series evaluation, scalar spectral densities by Stieltjes inversion.
//! - [`matrix_model`]: seeded Gaussian block-weighted random matrices
//!   realizing `z`, with empirical moments, conditional expectations,
//!   singular numbers and spectral statistics.
//! - [`hyperinvariant`]: numerical evaluation of the hyperinvariant-subspace
//!   criterion quantities and quasinilpotence certificates.
//! - [`finite_algebra`]: finite-dimensional *-algebra generation, commutants
//!   and invariant-but-not-hyperinvariant witnesses.

extern crate blas_src;

pub mod error;
pub mod finite_algebra;
pub mod hyperinvariant;
pub mod matrix_model;
pub mod moment_engine;
pub mod nc_partitions;
pub mod step_algebra;
pub mod transforms;

pub use error::{Error, Result};
pub use step_algebra::{BlockDensity, CovariancePair, Preset, StepFunction};
