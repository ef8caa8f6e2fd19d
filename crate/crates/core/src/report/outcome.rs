use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    /// The claim is measured but deliberately not asserted.
    #[serde(rename = "REPORT_ONLY")]
    ReportOnly,
    /// A hypothesis of the claim does not hold for this input.
    #[serde(rename = "PRECONDITION_REJECTED")]
    PreconditionRejected,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ReportOnly => "REPORT_ONLY",
            Verdict::PreconditionRejected => "PRECONDITION_REJECTED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One measured quantity compared against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    /// Report-only checks never decide the verdict.
    pub asserted: bool,
    pub holds: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64, asserted: bool) -> Self {
        let holds = match relation {
            Relation::AtMost => value <= bound,
            Relation::Below => value < bound,
            Relation::AtLeast => value >= bound,
        };
        Self { name: name.into(), value, relation, bound, asserted, holds }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtMost, bound, true)
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::Below, bound, true)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, bound, true)
    }

    pub fn reported(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn failed(&self) -> bool {
        self.asserted && !self.holds
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => f.write_str(&format_number(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

/// A named CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Base and doubled-resolution values of one decisive quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub quantity: String,
    pub base: f64,
    pub refined: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ladder {
    pub space_factor: usize,
    pub time_factor: usize,
    pub rows: Vec<LadderRow>,
    /// Asserted checks repeated at the refined resolution.
    pub checks: Vec<Check>,
}

impl Ladder {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.agrees) && self.checks.iter().all(|c| !c.failed())
    }
}

/// Structured record of one claim check.
#[derive(Debug, Clone, Serialize)]
pub struct ClaimReport {
    pub experiment: String,
    pub id: String,
    pub digest: String,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub decisive: Vec<(String, f64)>,
    pub ladder: Option<Ladder>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ClaimReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn decisive_value(&self, name: &str) -> Option<f64> {
        self.decisive.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json` and every table into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        self.files = self.tables.iter().map(Table::file_name).collect();
        self.files.push("report.json".into());
        for t in &self.tables {
            let p = dir.join(t.file_name());
            write_atomic(&p, t.to_csv().as_bytes())?;
            written.push(p);
        }
        let p = dir.join("report.json");
        write_atomic(&p, self.to_json().as_bytes())?;
        written.push(p);
        Ok(written)
    }
}
