use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::config::{from_value, ExperimentConfig};
use super::outcome::{format_number, Cell, ClaimReport, Table};
use super::runner::run;
use crate::error::{LabError, Result};

pub const DEFAULT_SWEEP_CAP: usize = 256;

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

/// Parameter grid: dotted config paths mapped to candidate values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub parameters: BTreeMap<String, Vec<Value>>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<SweepGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LabError::Parse(e.to_string()))
}

/// Numbers numerically, arrays elementwise, everything else by its JSON text.
fn compare_values(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            x.as_f64().unwrap_or(f64::NAN).total_cmp(&y.as_f64().unwrap_or(f64::NAN))
        }
        (Value::Array(x), Value::Array(y)) => {
            for (p, q) in x.iter().zip(y) {
                let o = compare_values(p, q);
                if o != Ordering::Equal {
                    return o;
                }
            }
            x.len().cmp(&y.len())
        }
        _ => a.to_string().cmp(&b.to_string()),
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| LabError::Validation(vec![format!("sweep path '{path}' does not lead through objects")]))?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// One grid point: its parameter values and the resulting config.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub values: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

/// Expands the cartesian product in lexicographic parameter order.
pub fn expand(template: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepPoint>> {
    if grid.parameters.values().any(Vec::is_empty) {
        return Err(LabError::Validation(vec!["every sweep parameter needs at least one value".into()]));
    }
    let size = grid.parameters.values().try_fold(1usize, |n, v| n.checked_mul(v.len()));
    match size {
        Some(n) if n <= grid.cap => {}
        _ => {
            return Err(LabError::Validation(vec![format!(
                "sweep grid has more than the cap of {} points",
                grid.cap
            )]))
        }
    }
    let names: Vec<&String> = grid.parameters.keys().collect();
    let mut combos: Vec<Vec<Value>> = vec![vec![]];
    for name in &names {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                grid.parameters[*name].iter().map(move |v| {
                    let mut next = c.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    combos.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| compare_values(x, y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    let base = serde_json::to_value(template).expect("config serializes");
    combos
        .into_iter()
        .enumerate()
        .map(|(i, combo)| {
            let mut value = base.clone();
            for (name, v) in names.iter().zip(&combo) {
                set_path(&mut value, name, v.clone())?;
            }
            set_path(&mut value, "output_dir", Value::String(format!("{}/point_{i:04}", template.output_dir)))?;
            let config = from_value(value)?;
            let values = names.iter().map(|n| n.to_string()).zip(combo).collect();
            Ok(SweepPoint { values, config })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub reports: Vec<ClaimReport>,
    pub table: Table,
    /// Largest exit code over the points.
    pub exit_code: i32,
}

fn value_cell(v: &Value) -> Cell {
    match v {
        Value::Number(n) if n.is_f64() => Cell::Text(format_number(n.as_f64().unwrap())),
        Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

/// Runs every grid point on at most `workers` threads and assembles one
/// row per point.
pub fn sweep(template: &ExperimentConfig, grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    let points = expand(template, grid)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::input(format!("cannot start worker pool: {e}")))?;
    let reports: Vec<ClaimReport> = pool.install(|| points.par_iter().map(|p| run(&p.config)).collect());

    let mut metric_names: Vec<String> = Vec::new();
    for r in &reports {
        for name in r.checks.iter().map(|c| &c.name).chain(r.decisive.iter().map(|(n, _)| n)) {
            if !metric_names.contains(name) {
                metric_names.push(name.clone());
            }
        }
    }
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(grid.parameters.keys().cloned());
    header.extend(["verdict".to_string(), "exit_code".to_string()]);
    header.extend(metric_names.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("sweep", &header_refs);
    for (i, (p, r)) in points.iter().zip(&reports).enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(p.values.iter().map(|(_, v)| value_cell(v)));
        row.push(r.verdict.as_str().into());
        row.push(Cell::Int(r.exit_code as i64));
        for name in &metric_names {
            let v = r.check(name).map(|c| c.value).or_else(|| r.decisive_value(name));
            row.push(v.into());
        }
        table.push(row);
    }
    let exit_code = reports.iter().map(|r| r.exit_code).max().unwrap_or(0);
    Ok(SweepResult { points, reports, table, exit_code })
}

/// [`sweep`] plus per-point reports under `dir/point_NNNN` and `dir/sweep.csv`.
pub fn sweep_to_dir(template: &ExperimentConfig, grid: &SweepGrid, workers: usize, dir: &Path) -> Result<SweepResult> {
    let mut result = sweep(template, grid, workers)?;
    for (i, r) in result.reports.iter_mut().enumerate() {
        r.write(&dir.join(format!("point_{i:04}")))?;
    }
    super::outcome::write_atomic(&dir.join(result.table.file_name()), result.table.to_csv().as_bytes())?;
    Ok(result)
}
