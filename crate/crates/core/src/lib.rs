//! Nonlinear Moog ladder filter: model, Lyapunov certification, spectral
//! analysis and energy-dissipative time integration.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`]: fixed 4×4 dense matrices and small vector helpers.
//! - [`model`]: filter parameters, the nonlinear vector field, coordinate
//!   scaling and the `z`/`Q`/`g`/`G` decomposition of the scaled system.
//! - [`lyapunov`]: the quadratic and log-cosh Lyapunov candidates, their
//!   time derivatives and negative-definiteness certificates.
//! - [`spectral`]: closed-form and numeric eigenvalues of the linearised
//!   system.
//! - [`integrators`]: explicit RK4 and the discrete-gradient scheme.
//! - [`experiments`]: seeded sweeps and decay studies.
//! - [`io`] and [`cli`]: CSV/JSON output and the `moogvcf` command line.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod io;
pub mod jacobi;
pub mod lyapunov;
pub mod matrix;
pub mod model;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{Matrix4, Vec4};
pub use model::{FilterParams, ScaledState, State};
