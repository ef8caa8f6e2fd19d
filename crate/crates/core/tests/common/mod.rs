#![allow(dead_code)]

use std::path::PathBuf;

use pclab::report::{load_config, run, ClaimReport, ExperimentConfig};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn golden_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(format!("{name}.json"))
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn golden(name: &str) -> ExperimentConfig {
    load_config(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn run_golden(name: &str) -> ClaimReport {
    run(&golden(name))
}

/// Every config under `configs/`, sorted by name.
pub fn golden_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(repo_root().join("configs"))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "json").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn value(report: &ClaimReport, name: &str) -> f64 {
    report
        .check(name)
        .map(|c| c.value)
        .or_else(|| report.decisive_value(name))
        .unwrap_or_else(|| panic!("{}: no quantity named {name}", report.id))
}
