//! Pseudo-spectral solver for the approximate deconvolution (ADM)
//! regularization of the periodic 3D Boussinesq equations.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral`]: torus geometry, Fourier-coefficient fields, transforms,
//!   differentiation, Leray projection and Galerkin truncation.
//! - [`filter`]: Helmholtz filter, the operator `A = I - α²Δ` and the
//!   Van Cittert deconvolution `D_N`, all as diagonal Fourier multipliers.
//! - [`rhs`]: dealiased nonlinear terms, buoyancy, pressure recovery and
//!   tendency assembly.
//! - [`integrator`]: integrating-factor RK3 time stepping with observers.
//! - [`diagnostics`]: energy ledger, norm tables and residual evaluators.
//! - [`convergence`]: families of runs with `N → ∞`, `ε(N) → 0`.
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod integrator;
pub mod rhs;
pub mod spectral;

pub use error::{AdmError, Result};
pub use filter::DeconvolutionSpec;
pub use integrator::{SolverState, StepControl};
pub use rhs::{ModelParams, Terms};
pub use spectral::{SpectralField, SpectralScalarField, SpectralVectorField, TorusGrid};
