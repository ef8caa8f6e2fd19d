//! Divergence-free Fourier-Galerkin Navier-Stokes on the periodic box.

mod dynamics;
mod experiments;
mod field;

pub use dynamics::{convective_term, inner, ns_evolve, trilinear_b, Forcing, GalerkinTrajectory, BLOWUP_FACTOR};
pub use experiments::{
    forcing_from_samples, galerkin_truncate, ladyzhenskaya_check, ladyzhenskaya_ratio_on, ladyzhenskaya_survey,
    uniqueness_experiment, UniquenessRow, UniquenessTable,
};
pub use field::{leray_project, DivFreeField, PeriodicBox, VectorField, DIV_TOL};
