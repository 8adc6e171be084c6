//! Numerical laboratory for the viscous Hamilton-Jacobi equation
//! `u_t - Lap u + |grad u|^q = 0` with radially symmetric data.
//!
//! The crate provides radial grids and fields, closed-form solutions and
//! threshold functionals, a monotone finite-difference solver, the very
//! singular self-similar profile, and diagnostics that classify the large-time
//! behaviour of a run.

pub mod closed_forms;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod ode;
pub mod quad;
pub mod solver;
pub mod vss;

pub use error::{Error, Result};
pub use grid::{DatumFamily, Field, InitialDatum, RadialGrid, SignTag};
pub use solver::{ProblemSpec, SchemeConfig, Snapshot, Trajectory};
pub use vss::{DecayClass, ProfileTable};
