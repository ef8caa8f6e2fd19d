//! Configuration ingestion, orchestration and deterministic output.

mod config;
mod outcome;
mod runner;
mod sweep;

pub use config::{
    from_value, load_config, parse_config, BetaConfig, BoundsConfig, DomainConfig, ExperimentConfig, ExperimentKind,
    InitialConfig, ParamsConfig, ProfileConfig, SeedsConfig, SourceConfig, TermConfig, TimeConfig, TolerancesConfig,
    WindowConfig,
};
pub use outcome::{format_number, write_atomic, Cell, Check, ClaimReport, Ladder, LadderRow, Relation, Table, Verdict};
pub use runner::{
    evaluate, ladder_resolution, observed_order, run, run_to_dir, Outcome, Resolution, LAMBDA_TOL, RK4_ORDER_TOL,
    TAYLOR_GREEN_TOL, TRAJECTORY_DIV_TOL,
};
pub use sweep::{expand, load_grid, sweep, sweep_to_dir, SweepGrid, SweepPoint, SweepResult, DEFAULT_SWEEP_CAP};
