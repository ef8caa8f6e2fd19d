mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pclab::report::{load_config, parse_config, run, sweep, SweepGrid, Verdict};
use serde_json::{json, Value};

const GOLDEN_DIGESTS: &[(&str, &str)] = &[
    ("decomposition", "4a444c1727338e9cacecbea95f4956e50307561f4b50dbfd8153927ce607ef48"),
    ("decomposition_signed", "64d0721ad0837bbe0946c020563327d21bb704c750f0960d05c11c8c8f77a3d3"),
    ("heat", "5e3d86b894f38c88ecb0aa4166e52532b2d10d94feb8cb1c300c6a39ad8aa3e3"),
    ("l4", "e8381a6825299a68ebb26c12d7a95ea0bb7c01aee198779c194d18c808de1736"),
    ("ladyzhenskaya", "bb0e64bd42577811db4b0b504447a97630ba2158011c8b6d2efe427bb718a16b"),
    ("max_principle", "950d0090264ef3d26acd414632c09ea2374090e45ec3cc0b784caaaf8d4ea639"),
    ("max_principle_2d", "515d96924b9d668be85077b841a8434b94f46f3e08d858e74df5ee2b4f2a6e2b"),
    ("max_principle_dip", "4084e279f1d9b70e561f242dcf15f1ac19daa5d8f711b66c348ae84cfadac960"),
    ("mollification", "9e5c7467af9deb50d8194c55ebddc9d8f3a605595fafa9ae3cee28a653cf80e0"),
    ("ns_energy", "11c3dc81f972f975904c95829639f8e0c1118e6e8dea47827691fed12f19b2a2"),
    ("ns_rk4_order", "c62b0264520c2a8eb49cb7cbda2d80d9922b305fafaf06f1f8a65292954d5be5"),
    ("ns_taylor_green", "cdf36dcf34393e627418eb2ad40bdfc312f9264e0b73f1410380e3162e3117e5"),
    ("ns_uniqueness", "59198304827f5e5a0d4b8fdbf6ced6c53425fcebadaa0c60dba7a2a64b8f3ecc"),
    ("parabolic", "87b904c10eb59a991fd5c05a64c153f66df58afedb193519390dd724aea1e075"),
    ("proportionality", "1c5965ec27315ddb8ea8fbe80b6fd2dccb119a9a400712ffd6b39efdcd3716bd"),
    ("proportionality_mixed", "c7d347c30ef85e5cbcfd6b790c528e4b9d1a20e802ea05805c376662c6cc71a4"),
    ("v_sequence", "f0f2441fb8d9069df140b91abebf596cd78adc3ee3a4763d7e9a0971e9399072"),
];

fn pclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pclab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn golden_json(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(common::golden_path(name)).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn golden_digests_are_stable() {
    let names = common::golden_names();
    assert_eq!(names.len(), GOLDEN_DIGESTS.len(), "every golden config needs a recorded digest");
    for (name, digest) in GOLDEN_DIGESTS {
        assert_eq!(common::golden(name).digest(), *digest, "{name}");
    }
}

#[test]
fn digest_ignores_output_dir_and_key_order() {
    let mut v = golden_json("heat");
    let a = pclab::report::from_value(v.clone()).unwrap().digest();
    v["output_dir"] = json!("elsewhere");
    assert_eq!(pclab::report::from_value(v).unwrap().digest(), a);
    let reordered = r#"{"output_dir": "x", "time": {"steps": 20, "horizon": 2.0}, "experiment": "heat",
        "initial": {"terms": [{"amplitude": 1.0, "mode": [1]}, {"amplitude": 0.5, "mode": [2]},
        {"amplitude": 0.3333333333333333, "mode": [3]}, {"amplitude": 0.25, "mode": [4]},
        {"amplitude": 0.2, "mode": [5]}, {"amplitude": 0.16666666666666666, "mode": [6]},
        {"amplitude": 0.14285714285714285, "mode": [7]}, {"amplitude": 0.125, "mode": [8]}], "kind": "modes"},
        "domain": {"grid_points": [64]}}"#;
    assert_eq!(parse_config(reordered).unwrap().digest(), a);
}

#[test]
fn minimal_config_is_echoed_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_json(
        tmp.path(),
        "min.json",
        &json!({"experiment": "heat", "domain": {"grid_points": [16]}, "time": {"horizon": 1.0, "steps": 4},
                "output_dir": "out"}),
    );
    let out = pclab(&["validate", &p]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["\"method\": \"duhamel\"", "\"mode_cap\"", "\"ladder\"", "digest "] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn validation_lists_every_violation_and_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = golden_json("proportionality");
    v["source"]["bounds"]["c"] = json!(-1.0);
    v["time"]["steps"] = json!(0);
    let p = write_json(tmp.path(), "bad.json", &v);
    let out = pclab(&["run", &p]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bounds.c must be > 0"), "{err}");
    assert!(err.lines().filter(|l| l.trim_start().starts_with("- ")).count() >= 2, "{err}");
}

#[test]
fn parse_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("broken.json");
    fs::write(&p, "{ not json").unwrap();
    assert_eq!(code(&pclab(&["run", p.to_str().unwrap()])), 2);
    let mut v = golden_json("heat");
    v["surprise"] = json!(1);
    let q = write_json(tmp.path(), "unknown.json", &v);
    assert_eq!(code(&pclab(&["validate", &q])), 2);
    assert_eq!(code(&pclab(&["validate", "/nonexistent/config.json"])), 2);
}

#[test]
fn unknown_experiment_is_a_validation_error() {
    let mut v = golden_json("heat");
    v["experiment"] = json!("wave");
    match pclab::report::from_value(v) {
        Err(pclab::LabError::Validation(errs)) => assert!(errs[0].contains("heat"), "{errs:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_exit_codes_follow_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |n: &str| tmp.path().join(n).display().to_string();

    let out = pclab(&["run", common::golden_path("heat").to_str().unwrap(), "--output-dir", &dir("pass")]);
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("pass/report.json").exists() && tmp.path().join("pass/series.csv").exists());

    let out = pclab(&["run", common::golden_path("proportionality").to_str().unwrap(), "--output-dir", &dir("ro")]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("REPORT_ONLY"));

    let mut strict = golden_json("parabolic");
    strict["tolerances"] = json!({"claim": 1e-9});
    let p = write_json(tmp.path(), "strict.json", &strict);
    assert_eq!(code(&pclab(&["run", &p, "--output-dir", &dir("fail")])), 1);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("fail/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "FAIL");

    let fixture = common::fixture_path("beta_interior_max");
    assert_eq!(code(&pclab(&["run", fixture.to_str().unwrap(), "--output-dir", &dir("rej")])), 3);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("rej/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "PRECONDITION_REJECTED");

    let blow = json!({"experiment": "ns_energy", "domain": {"dims": 2, "radius": 4},
        "time": {"horizon": 1.0, "steps": 4}, "initial": {"kind": "taylor_green"},
        "source": {"kind": "taylor_green", "amplitude": 1e12}, "params": {"nu": 0.1}, "output_dir": "x"});
    let p = write_json(tmp.path(), "blow.json", &blow);
    assert_eq!(code(&pclab(&["run", &p, "--output-dir", &dir("div")])), 4);
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("div/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "FAIL");
}

#[test]
fn list_experiments_names_all_kinds() {
    let out = pclab(&["list-experiments"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in pclab::report::ExperimentKind::ALL {
        assert!(text.contains(kind.as_str()));
    }
    assert_eq!(pclab::report::ExperimentKind::ALL.len(), 11);
}

#[test]
fn repeated_runs_write_identical_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["heat", "l4", "ns_uniqueness"] {
        let cfg = common::golden_path(name);
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        for d in [&a, &b] {
            assert_eq!(code(&pclab(&["run", cfg.to_str().unwrap(), "--output-dir", d.to_str().unwrap()])), 0);
        }
        let (ca, cb) = (csv_files(&a), csv_files(&b));
        assert!(!ca.is_empty());
        assert_eq!(ca, cb, "{name}");
    }
}

#[test]
fn csv_numbers_carry_seventeen_significant_digits() {
    let report = common::run_golden("heat");
    let csv = report.table("series").unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').next(), Some("t"));
    for cell in lines.next().unwrap().split(',') {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{cell}");
    }
}

#[test]
fn sweep_rows_are_lexicographic_and_counted() {
    let template = common::golden("v_sequence");
    let grid = SweepGrid {
        parameters: [("params.epsilon".to_string(), vec![json!(0.75), json!(0.25), json!(0.5)])].into(),
        cap: 8,
    };
    let result = sweep(&template, &grid, 3).unwrap();
    assert_eq!(result.table.rows.len(), 3);
    let eps: Vec<f64> = result.points.iter().map(|p| p.config.params.epsilon.unwrap()).collect();
    assert_eq!(eps, vec![0.25, 0.5, 0.75]);
    assert_eq!(result.table.header[..4], ["point", "params.epsilon", "verdict", "exit_code"]);

    let serial = sweep(&template, &grid, 1).unwrap();
    assert_eq!(serial.table.to_csv(), result.table.to_csv());
}

#[test]
fn sweep_cap_is_enforced() {
    let template = common::golden("heat");
    let grid = SweepGrid { parameters: [("time.steps".to_string(), vec![json!(4), json!(8), json!(16)])].into(), cap: 2 };
    match sweep(&template, &grid, 1) {
        Err(e) => assert_eq!(e.exit_code(), 3),
        Ok(_) => panic!("cap not enforced"),
    }
}

#[test]
fn one_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = tmp.path().join("grid.json");
    fs::write(&grid, r#"{"parameters": {"time.steps": [20]}}"#).unwrap();
    let cfg = common::golden_path("heat");
    let (sdir, rdir) = (tmp.path().join("sweep"), tmp.path().join("run"));
    let out = pclab(&["sweep", cfg.to_str().unwrap(), "--grid", grid.to_str().unwrap(), "--output-dir", sdir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&pclab(&["run", cfg.to_str().unwrap(), "--output-dir", rdir.to_str().unwrap()])), 0);
    assert_eq!(csv_files(&sdir.join("point_0000")), csv_files(&rdir));
    let sweep_csv = fs::read_to_string(sdir.join("sweep.csv")).unwrap();
    assert_eq!(sweep_csv.lines().count(), 2);

    let a: Value = serde_json::from_str(&fs::read_to_string(sdir.join("point_0000/report.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(rdir.join("report.json")).unwrap()).unwrap();
    for key in ["digest", "verdict", "checks", "decisive", "ladder"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}

#[test]
fn n_list_sweep_gives_nonincreasing_gaps() {
    let template = load_config(common::golden_path("ns_uniqueness")).unwrap();
    let grid = SweepGrid {
        parameters: [("params.n_list".to_string(), vec![json!([3]), json!([1]), json!([2])])].into(),
        cap: 8,
    };
    let result = sweep(&template, &grid, 2).unwrap();
    assert!(result.reports.iter().all(|r| r.verdict == Verdict::Pass));
    let col = result.table.header.iter().position(|h| h == "d_n_at_largest_listed").unwrap();
    let d: Vec<f64> = result
        .table
        .rows
        .iter()
        .map(|r| match r[col] {
            pclab::report::Cell::Num(v) => v,
            _ => panic!(),
        })
        .collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert_eq!(run(&template).decisive_value("d_n3"), Some(d[2]));
}
