//! Constructions for linear parabolic problems and their checks.

mod beta;
mod decomposition;
mod l4;
mod max_principle;
mod proportionality;
mod vsequence;

pub use beta::{BetaProfile, MIN_SAMPLES};
pub use decomposition::{decompose_lambda, source_mollification_study, CauchyRow, LambdaTrajectory, MollificationStudy};
pub use l4::{l4_comparison, random_two_mode, L4Comparison};
pub use max_principle::{
    max_principle_experiment, random_admissible_case, random_nonnegative_modes, MaxPrincipleCase,
    MaxPrincipleOutcome, SupersolutionSpec, SIGN_SLACK,
};
pub use proportionality::{proportionality_residual, proportionality_residual_of, ProportionalitySeries};
pub use vsequence::{
    select_profile, supersolution_family, v_sequence_run, vtilde, vtilde_step, window_profile, InitialIterate,
    PreparedSupersolution, SlopeBounds, StepDiagnostics, Termination, VSequenceConfig, VSequenceProblem,
    VSequenceReport, VSequenceState, Window, MONOTONE_TOL, SIGN_TOL,
};
