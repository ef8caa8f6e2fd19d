//! Spectral laboratory for linear parabolic comparison constructions and
//! Fourier-Galerkin Navier-Stokes uniqueness experiments.
//!
//! * [`spectral`]: Dirichlet sine eigenbasis on boxes, transforms and norms.
//! * [`evolution`]: exact heat propagator and two parabolic integrators.
//! * [`claims`]: final-time maximum principle, the `v_k` iteration,
//!   proportionality residuals, the lambda decomposition and the L4 bound.
//! * [`ns`]: divergence-free Fourier-Galerkin Navier-Stokes on the torus.
//! * [`report`]: configuration, orchestration and deterministic output.

pub mod claims;
pub mod error;
pub mod evolution;
pub mod ns;
pub mod report;
pub mod spectral;

pub use error::{LabError, Result};
