//! One line per acceptance criterion; exits nonzero if any criterion fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use pclab::claims::proportionality_residual;
use pclab::evolution::{heat_evolve, Source, TimeProfile};
use pclab::ns::{trilinear_b, DivFreeField, PeriodicBox};
use pclab::report::{parse_config, run, run_to_dir, ClaimReport, Verdict};
use pclab::spectral::{BoxDomain, SpectralField, TimeGrid};

const R1_ORACLE: f64 = 0.0412698698095737;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn v(r: &ClaimReport, name: &str) -> f64 {
    common::value(r, name)
}

fn ladder_ok(r: &ClaimReport) -> bool {
    r.ladder.as_ref().is_some_and(|l| l.holds())
}

fn heat_exactness() -> Outcome {
    let d = BoxDomain::interval(std::f64::consts::PI, 32).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=8usize {
        let y0 = SpectralField::single_mode(&d, &[16], &[k], 1.0).unwrap();
        for i in 0..=20 {
            let t = 0.1 * i as f64;
            let want = (-((k * k) as f64) * t).exp();
            let got = heat_evolve(&y0, t).unwrap().coeff(&[k]);
            worst = worst.max((got - want).abs() / want);
        }
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.3e} over k <= 8, t <= 2"))
}

fn cn_order() -> Outcome {
    let r = common::run_golden("parabolic");
    let order = v(&r, "crank_nicolson_order");
    outcome((order - 2.0).abs() <= 0.2 && r.verdict == Verdict::Pass, format!("observed order {order:.4} over steps 64/128/256"))
}

fn max_principle_suite() -> Outcome {
    let one = common::run_golden("max_principle");
    let two = common::run_golden("max_principle_2d");
    let pass = [&one, &two].iter().all(|r| r.verdict == Verdict::Pass && ladder_ok(r) && v(r, "passing_fraction") == 1.0);
    outcome(
        pass,
        format!(
            "1-D {} cases worst max z/scale {:.3e}; 2-D {} cases worst {:.3e}; 2x ladder {}",
            one.table("cases").unwrap().rows.len(),
            v(&one, "worst_max_z_over_scale"),
            two.table("cases").unwrap().rows.len(),
            v(&two, "worst_max_z_over_scale"),
            if ladder_ok(&one) && ladder_ok(&two) { "agrees" } else { "disagrees" }
        ),
    )
}

fn l4_comparison() -> Outcome {
    let r = common::run_golden("l4");
    let (p, n) = (v(&r, "worst_pointwise_margin_over_scale"), v(&r, "worst_norm_margin_over_scale"));
    let draws = r.table("draws").unwrap().rows.len();
    outcome(
        r.verdict == Verdict::Pass && draws == 100 && p >= -1e-6 && n >= -1e-6,
        format!("{draws} draws, worst pointwise margin/scale {p:.3e}, worst norm margin/scale {n:.3e}"),
    )
}

fn linearity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for name in common::golden_names() {
        let config = common::golden(&name);
        if matches!(config.experiment.as_str(), "decomposition" | "mollification") {
            worst = worst.max(v(&run(&config), "max_linearity_residual"));
            count += 1;
        }
    }
    outcome(count > 0 && worst < 1e-10, format!("max relative residual {worst:.3e} over {count} golden configs"))
}

fn lambda_lower_bound() -> Outcome {
    let forced = parse_config(
        r#"{"experiment": "decomposition", "domain": {"grid_points": [128]}, "time": {"horizon": 2.0, "steps": 40},
            "source": {"kind": "constant", "value": 2.0},
            "initial": {"kind": "modes", "terms": [{"mode": [1], "amplitude": 1.0}, {"mode": [3], "amplitude": 0.3}]},
            "params": {"c": 0.5}, "output_dir": "out/acceptance_lambda"}"#,
    )
    .unwrap();
    let reports = [common::run_golden("decomposition"), run(&forced)];
    let worst = reports.iter().map(|r| v(r, "min_lambda")).fold(f64::INFINITY, f64::min);
    let asserted = reports.iter().all(|r| r.check("min_lambda").unwrap().asserted && r.verdict == Verdict::Pass);
    outcome(asserted && worst >= 1.0 - 1e-10, format!("min lambda_i(t) {worst:.12} over {} configs", reports.len()))
}

fn proportionality() -> Outcome {
    let r = common::run_golden("proportionality");
    let r1 = v(&r, "residual_final");
    let d = BoxDomain::interval(std::f64::consts::PI, 64).unwrap();
    let y0 = SpectralField::single_mode(&d, &[64], &[1], 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let single = [Source::zero(), Source::eigenmode(vec![1], 1.5, TimeProfile::Constant)]
        .iter()
        .map(|u| proportionality_residual(&y0, u, &grid, false).unwrap().max())
        .fold(0.0, f64::max);
    let mixed = common::run_golden("proportionality_mixed");
    let rm = v(&mixed, "residual_final");
    outcome(
        (r1 - R1_ORACLE).abs() <= 1e-6 && single <= 1e-12 && rm > 0.0 && r.verdict == Verdict::ReportOnly,
        format!(
            "r(1) {r1:.10} vs oracle {R1_ORACLE:.10} (diff {:.2e}); single-mode max r {single:.1e}; mixed r(1) {rm:.4e} recorded",
            (r1 - R1_ORACLE).abs()
        ),
    )
}

fn v_sequence() -> Outcome {
    let r = common::run_golden("v_sequence");
    let rejected = run(&pclab::report::load_config(common::fixture_path("v_sequence_short_horizon")).unwrap());
    let names_inequality = rejected.verdict == Verdict::PreconditionRejected
        && rejected.error.as_deref().is_some_and(|e| e.contains("beta' <= (|y(T)| - |Psi(T)|) c / sup w"));
    let iterations = v(&r, "completed_iterations");
    let pass = r.verdict == Verdict::Pass
        && iterations == 10.0
        && v(&r, "max_sign") <= 1e-6
        && v(&r, "max_monotonicity_violation") <= 1e-10
        && v(&r, "max_pinning") == 0.0
        && names_inequality;
    outcome(
        pass,
        format!(
            "{iterations} iterations, max s_k {:.3e}, monotonicity violation {:.1e}, pinning {:.1e}; infeasible horizon names its inequality: {names_inequality}",
            v(&r, "max_sign"),
            v(&r, "max_monotonicity_violation"),
            v(&r, "max_pinning")
        ),
    )
}

fn ns_identities() -> Outcome {
    let mut skew: f64 = 0.0;
    for dims in [2, 3] {
        let pbox = PeriodicBox::new(dims, 4).unwrap();
        for s in 0..500u64 {
            let u = DivFreeField::random(pbox, 2 * s, 1.0);
            let w = DivFreeField::random(pbox, 2 * s + 1, 1.0);
            skew = skew.max(trilinear_b(&u, &w, &w).unwrap().abs() / (u.l2() * w.l2() * w.l2()));
        }
    }
    let energy = common::run_golden("ns_energy");
    let tg = common::run_golden("ns_taylor_green");
    let order_run = common::run_golden("ns_rk4_order");
    let balance = v(&energy, "energy_balance_residual_over_e0");
    let decay = v(&tg, "taylor_green_decay_error");
    let order = v(&order_run, "rk4_order");
    let pass = skew <= 1e-10
        && balance <= 1e-6
        && decay < 1e-8
        && (order - 4.0).abs() <= 0.3
        && [&energy, &tg, &order_run].iter().all(|r| r.verdict == Verdict::Pass);
    outcome(
        pass,
        format!(
            "1000 triples max |b(u,v,v)|/(|u||v|^2) {skew:.2e}; energy balance/|y0|^2 {balance:.2e}; TG decay error {decay:.2e}; RK4 order {order:.3}"
        ),
    )
}

fn gronwall() -> Outcome {
    let r = common::run_golden("ns_uniqueness");
    let d: Vec<f64> = (1..=4).map(|n| v(&r, &format!("d_n{n}"))).collect();
    let ladder = r.ladder.as_ref().map(|l| l.rows.iter().map(|x| x.difference).fold(0.0, f64::max));
    let c_finite = v(&r, "undefined_gronwall_constants") == 0.0;
    let pass = r.verdict == Verdict::Pass && d[0] > d[1] && d[1] > d[2] && d[3] <= 1e-10 && c_finite
        && ladder.is_some_and(|x| x <= 1e-4);
    outcome(
        pass,
        format!(
            "D_1..3 = {:.4e}, {:.4e}, {:.4e}; D_K = {:.1e}; C_n finite: {c_finite}; 2x time ladder max diff {:.2e}",
            d[0],
            d[1],
            d[2],
            d[3],
            ladder.unwrap_or(f64::NAN)
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let names = common::golden_names();
    let mut mismatched = vec![];
    let mut files = 0;
    for name in &names {
        let config = common::golden(name);
        let mut dirs = vec![];
        for pass in ["a", "b"] {
            let dir = tmp.path().join(format!("{name}_{pass}"));
            run_to_dir(&config, &dir).unwrap();
            dirs.push(dir);
        }
        let read = |dir: &std::path::Path| {
            let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
                .collect();
            out.sort();
            out
        };
        let (a, b) = (read(&dirs[0]), read(&dirs[1]));
        files += a.len();
        if a != b || a.is_empty() {
            mismatched.push(name.clone());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{} golden configs, {files} CSV files byte-identical across two runs; mismatched: {mismatched:?}", names.len()),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Option<f64>, fn() -> Outcome)> = vec![
        ("heat propagator exact on single modes", Some(1.0), heat_exactness),
        ("Crank-Nicolson observed order 2.0 +- 0.2", Some(10.0), cn_order),
        ("final-time maximum principle suite (1-D x100, 2-D x20, 2x ladder)", Some(300.0), max_principle_suite),
        ("L4 comparison margins over 100 draws", Some(120.0), l4_comparison),
        ("linearity identity of the lambda decomposition", None, linearity),
        ("lambda_i >= 1 for u >= c > 0, y0 >= 0", None, lambda_lower_bound),
        ("proportionality residual oracle, single-mode and mixed-mode", None, proportionality),
        ("v-sequence diagnostics and infeasibility naming", None, v_sequence),
        ("Navier-Stokes identities (skew, energy, Taylor-Green, RK4 order)", None, ns_identities),
        ("Gronwall truncation experiment (3-D, K = 4, nu = 0.5)", Some(600.0), gronwall),
        ("determinism of CSV output for every golden config", None, determinism),
    ];
    let (total, mut failures) = (criteria.len(), 0);
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let mut out = check();
        let secs = start.elapsed().as_secs_f64();
        if let Some(limit) = limit {
            if secs >= limit {
                out.pass = false;
                out.detail.push_str(&format!("; runtime limit {limit} s exceeded"));
            }
        }
        if !out.pass {
            failures += 1;
        }
        println!("{} | {name} | {} | {secs:.2} s", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("acceptance: {total} criteria, {failures} failed");
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
