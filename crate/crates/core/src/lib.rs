//! Pseudo-spectral simulation and Fourier-side linear analysis of the
//! compressible Euler-alignment equations: isentropic pressure plus a fractional
//! alignment force.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`], [`field`], [`spectral`]: periodic grids, Fourier coefficient
//!   storage and the multiplier operators (`Λ^β`, `ℙ`, `Λ⁻¹div`, dealiasing, norms).
//! * [`model`]: the right-hand sides in primitive, perturbation and
//!   symmetrized variables, and the forcing terms `F`, `G`, `H`.
//! * [`linear`]: eigenvalues and Green's matrix of the linearized system,
//!   decay-rate tables and quadrature-based audits of the linear decay estimates.
//! * [`timestepper`]: exponential integration driven by the Green's matrix.
//! * [`diagnostics`]: time series, decay fits, conserved quantities and energy functionals.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fit;
pub mod grid;
pub mod linear;
pub mod model;
pub mod scenario;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::{make_grid, Grid};
pub use model::{PhysParams, SimState};
