mod common;

use pclab::claims::{l4_comparison, proportionality_residual, random_two_mode, BetaProfile};
use pclab::evolution::{Source, TimeProfile};
use pclab::report::{evaluate, load_config, run, Resolution, Verdict};
use pclab::spectral::{BoxDomain, SpectralField, TimeGrid};
use pclab::LabError;

// Odd-mode Duhamel series for y0 = sin x, u = 1 on (0, pi), 20000 modes.
const R1_ORACLE: f64 = 0.0412698698095737;
// |y_i(1)| / |phi_i(1)| for y0 = sin x, u = 0, c = 1, same series.
const LAMBDA1_ORACLE: f64 = 2.0949264889723955;
const LAMBDA2_ORACLE: f64 = 3.190501407428786;

fn interval(n: usize) -> BoxDomain {
    BoxDomain::interval(std::f64::consts::PI, n).unwrap()
}

#[test]
fn proportionality_residual_matches_series_oracle() {
    let report = common::run_golden("proportionality");
    assert_eq!(report.verdict, Verdict::ReportOnly);
    assert_eq!(report.exit_code, 0);
    let r1 = common::value(&report, "residual_final");
    assert!((r1 - R1_ORACLE).abs() <= 1e-6, "r(1) = {r1}");
}

#[test]
fn single_mode_data_stay_proportional() {
    let d = interval(64);
    let y0 = SpectralField::single_mode(&d, &[64], &[1], 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    for u in [Source::zero(), Source::eigenmode(vec![1], 2.0, TimeProfile::Linear { slope: 1.0 })] {
        let series = proportionality_residual(&y0, &u, &grid, false).unwrap();
        assert!(series.max() <= 1e-12, "{}", series.max());
    }
}

#[test]
fn mixed_mode_residual_is_recorded_not_suppressed() {
    let report = common::run_golden("proportionality_mixed");
    assert_eq!(report.verdict, Verdict::ReportOnly);
    let r = common::value(&report, "residual_final");
    assert!(r > 1e-3, "r = {r}");
    let series = report.table("series").unwrap();
    assert!(series.rows.len() > 1);
}

#[test]
fn proportionality_requires_positive_lower_bound() {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(common::golden_path("proportionality")).unwrap()).unwrap();
    v["source"]["bounds"]["c"] = serde_json::json!(0.0);
    match pclab::report::from_value(v) {
        Err(LabError::Validation(errs)) => assert!(errs.iter().any(|e| e.contains("bounds.c must be > 0")), "{errs:?}"),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn lambda_decomposition_matches_series_oracle() {
    let report = common::run_golden("decomposition");
    assert_eq!(report.verdict, Verdict::Pass);
    assert!((common::value(&report, "lambda1_final") - LAMBDA1_ORACLE).abs() < 1e-9);
    assert!((common::value(&report, "lambda2_final") - LAMBDA2_ORACLE).abs() < 1e-9);
    assert!(common::value(&report, "min_lambda") >= 1.0 - 1e-10);
}

#[test]
fn linearity_identity_holds_on_every_decomposition_config() {
    for name in common::golden_names() {
        let config = common::golden(&name);
        if !matches!(config.experiment.as_str(), "decomposition" | "mollification") {
            continue;
        }
        let report = run(&config);
        assert!(common::value(&report, "max_linearity_residual") < 1e-10, "{name}");
    }
}

#[test]
fn signed_data_report_lambda_without_asserting_it() {
    let report = common::run_golden("decomposition_signed");
    let check = report.check("min_lambda").unwrap();
    assert!(!check.asserted);
    assert!(report.check("max_reconstruction_residual").map(|c| !c.asserted).unwrap());
}

#[test]
fn max_principle_suites_pass_at_both_resolutions() {
    for name in ["max_principle", "max_principle_2d"] {
        let report = common::run_golden(name);
        assert_eq!(report.verdict, Verdict::Pass, "{name}: {}", report.to_json());
        assert_eq!(common::value(&report, "passing_fraction"), 1.0);
        let ladder = report.ladder.as_ref().unwrap();
        assert_eq!((ladder.space_factor, ladder.time_factor), (2, 2));
        assert!(ladder.holds());
    }
}

#[test]
fn interior_dip_profile_agrees_with_fine_reference() {
    let config = common::golden("max_principle_dip");
    let base = evaluate(&config, Resolution::BASE).unwrap();
    let fine = evaluate(&config, Resolution { space: 4, time: 4 }).unwrap();
    let row = |o: &pclab::report::Outcome| match o.tables[0].rows[0][1] {
        pclab::report::Cell::Num(v) => v,
        _ => unreachable!(),
    };
    let (zb, zf) = (row(&base), row(&fine));
    assert!(zb <= 1e-8 && zf <= 1e-8);
    // z(T) < 0 vanishes at the wall, so the nodal max sits next to it and scales with h.
    let h = |n: usize| std::f64::consts::PI / (n + 1) as f64;
    let (sb, sf) = (zb / h(64), zf / h(256));
    assert!((sb - sf).abs() < 1e-2 * sf.abs(), "{sb} vs {sf}");
}

#[test]
fn beta_without_terminal_max_is_rejected() {
    let report = run(&load_config(common::fixture_path("beta_interior_max")).unwrap());
    assert_eq!(report.verdict, Verdict::PreconditionRejected);
    assert_eq!(report.exit_code, 3);
    assert!(report.error.as_deref().unwrap().contains("max beta attained at T"));
    assert!(BetaProfile::through_points(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 1.0]).unwrap().validate().is_ok());
}

#[test]
fn l4_margins_hold_for_seeded_draws() {
    let d = interval(64);
    let grid = TimeGrid::new(1.0, 20).unwrap();
    for seed in 0..10 {
        let y0 = random_two_mode(seed, &d, &[64]).unwrap();
        let c = l4_comparison(&y0, &grid).unwrap();
        assert!(c.min_pointwise() >= -1e-6 * c.pointwise_scale, "seed {seed}");
        assert!(c.min_norm_margin() >= -1e-6 * c.norm_scale, "seed {seed}");
    }
}

#[test]
fn v_sequence_golden_completes_all_iterations() {
    let report = common::run_golden("v_sequence");
    assert_eq!(report.verdict, Verdict::Pass, "{}", report.to_json());
    assert_eq!(common::value(&report, "completed_iterations"), 10.0);
    assert!(common::value(&report, "max_sign") <= 1e-6);
    assert!(common::value(&report, "max_monotonicity_violation") <= 1e-10);
    assert_eq!(common::value(&report, "max_pinning"), 0.0);
    assert_eq!(report.table("steps").unwrap().rows.len(), 10);
    assert!(report.ladder.as_ref().unwrap().holds());
}

#[test]
fn v_sequence_infeasibility_names_the_inequality() {
    let report = run(&load_config(common::fixture_path("v_sequence_short_horizon")).unwrap());
    assert_eq!(report.verdict, Verdict::PreconditionRejected);
    let error = report.error.unwrap();
    assert!(error.contains("infeasible: beta'"), "{error}");
    assert!(error.contains("|y(T)| - |Psi(T)|"), "{error}");
}

#[test]
fn mollified_sources_converge() {
    let report = common::run_golden("mollification");
    assert_eq!(report.verdict, Verdict::Pass);
    let cauchy = report.table("cauchy").unwrap();
    assert!(!cauchy.rows.is_empty());
    assert!(common::value(&report, "last_cauchy_y_distance") < 1e-2);
}
