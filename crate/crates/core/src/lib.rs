//! Numerical laboratory for averaging operators along circles and ellipses in
//! the Heisenberg group, the associated lacunary maximal operators, and the
//! oscillatory-integral estimates that control them.
//!
//! Modules:
//! - [`matrix`]: the 2x2 twist matrix, its symmetric/skew split, and the
//!   analytic boundedness classification.
//! - [`cutoffs`]: smooth compactly supported bump functions and their exact
//!   telescoping partitions.
//! - [`grid`]: 3-D sampled functions on boxes with possibly nonuniform axes,
//!   norms, shears, and snapshot serialization.
//! - [`averages`]: elliptic averages, the lifted-measure transport identity,
//!   lacunary maximal functions, and twisted convolution.
//! - [`lp`]: 1-D Fourier multipliers and the shear-conjugated frequency
//!   projections along the degenerate directions.
//! - [`gft`]: the group Fourier transform as a family of integral operators,
//!   Plancherel and convolution-homomorphism checks.
//! - [`oscillatory`]: phase functions, discretized oscillatory kernels,
//!   operator norms, decay regression, the measure transform, and van der
//!   Corput checks.
//! - [`experiments`]: the slab divergence experiment and the dichotomy scan.

pub mod averages;
pub mod cutoffs;
pub mod error;
pub mod experiments;
pub mod gft;
pub mod grid;
pub mod lp;
pub mod matrix;
pub mod oscillatory;

pub use error::{Error, Result};
pub use grid::{Axis, Box3, GridFunction3};
pub use matrix::{classify, decompose, Matrix2, MatrixClassification, DEFAULT_CLASSIFY_TOL};
pub use oscillatory::{DecayFit, OscKernelSpec, PhaseSpec};
