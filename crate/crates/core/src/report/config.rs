use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::claims::{InitialIterate, Window};
use crate::error::{LabError, Result};
use crate::evolution::{Method, ModeTerm, Source, TimeProfile};
use crate::ns::{DivFreeField, Forcing, PeriodicBox};
use crate::spectral::{BoxDomain, SpectralField, TimeGrid};

/// Experiment kinds understood by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    Heat,
    Parabolic,
    MaxPrinciple,
    Proportionality,
    Decomposition,
    L4,
    VSequence,
    Mollification,
    NsEnergy,
    NsUniqueness,
    Ladyzhenskaya,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Heat,
        ExperimentKind::Parabolic,
        ExperimentKind::MaxPrinciple,
        ExperimentKind::Proportionality,
        ExperimentKind::Decomposition,
        ExperimentKind::L4,
        ExperimentKind::VSequence,
        ExperimentKind::Mollification,
        ExperimentKind::NsEnergy,
        ExperimentKind::NsUniqueness,
        ExperimentKind::Ladyzhenskaya,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Heat => "heat",
            ExperimentKind::Parabolic => "parabolic",
            ExperimentKind::MaxPrinciple => "max_principle",
            ExperimentKind::Proportionality => "proportionality",
            ExperimentKind::Decomposition => "decomposition",
            ExperimentKind::L4 => "l4",
            ExperimentKind::VSequence => "v_sequence",
            ExperimentKind::Mollification => "mollification",
            ExperimentKind::NsEnergy => "ns_energy",
            ExperimentKind::NsUniqueness => "ns_uniqueness",
            ExperimentKind::Ladyzhenskaya => "ladyzhenskaya",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentKind::Heat => "exact sine-basis heat propagator against closed-form decay",
            ExperimentKind::Parabolic => "Duhamel vs Crank-Nicolson cross-check and observed order",
            ExperimentKind::MaxPrinciple => "sign of z(T) for z_t - Delta z = -beta' w with beta peaking at T",
            ExperimentKind::Proportionality => "residual between y(t) and the free heat flow phi(t) (reported)",
            ExperimentKind::Decomposition => "y = lambda1 phi1 - lambda2 phi2 splitting, linearity and lambda >= 1",
            ExperimentKind::L4 => "phi^2 <= Psi pointwise and |Psi|^2 >= ||phi||_L4^4",
            ExperimentKind::VSequence => "iterated v_k construction with sign, monotonicity and pinning diagnostics",
            ExperimentKind::Mollification => "lambda decomposition along truncations of a rough source",
            ExperimentKind::NsEnergy => "Galerkin Navier-Stokes energy balance, incompressibility and time order",
            ExperimentKind::NsUniqueness => "distance between full and truncated-data Galerkin solutions",
            ExperimentKind::Ladyzhenskaya => "ratio ||v||_L4 / (sqrt 2 |v|^1/4 ||grad v||^3/4) (reported)",
        }
    }

    pub fn is_navier_stokes(&self) -> bool {
        matches!(self, ExperimentKind::NsEnergy | ExperimentKind::NsUniqueness | ExperimentKind::Ladyzhenskaya)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
            format!("experiment '{s}' is not one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_cap: Option<Vec<usize>>,
    /// Periodic box dimension (Navier-Stokes kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    /// Periodic box mode radius `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub mode: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

/// Right-hand side (parabolic kinds) or body force (Navier-Stokes kinds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
}

impl SourceConfig {
    fn zero() -> Self {
        Self {
            kind: "zero".into(),
            value: None,
            terms: None,
            profile: None,
            seed: None,
            band: None,
            exponent: None,
            cap: None,
            amplitude: None,
            bounds: None,
        }
    }
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaConfig {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

/// Kind-specific parameters; only the ones a kind reads are filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Splitting constant `c` of the lambda decomposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<TermConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    /// Tolerance of the claim itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<f64>,
    /// Agreement required between the base and the doubled resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    #[serde(default)]
    pub base: u64,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl Default for SeedsConfig {
    fn default() -> Self {
        Self { base: 0, count: 1 }
    }
}

/// A full experiment description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub domain: DomainConfig,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub seeds: SeedsConfig,
    pub output_dir: String,
}

/// Reads, parses, fills defaults and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
    from_value(value)
}

pub fn from_value(value: serde_json::Value) -> Result<ExperimentConfig> {
    let mut config: ExperimentConfig = serde_json::from_value(value).map_err(|e| LabError::Parse(e.to_string()))?;
    config.fill_defaults();
    config.validate()?;
    Ok(config)
}

fn is_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.experiment.parse().expect("validated config")
    }

    /// SHA-256 of the canonical JSON form, excluding `output_dir`.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        // serde_json maps are ordered by key, which makes this canonical.
        let text = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_pretty_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    fn fill_defaults(&mut self) {
        let Ok(kind) = self.experiment.parse::<ExperimentKind>() else { return };
        let d = &mut self.domain;
        if !kind.is_navier_stokes() {
            if let Some(points) = &d.grid_points {
                if d.lengths.is_none() {
                    d.lengths = Some(vec![PI; points.len()]);
                }
                if d.mode_cap.is_none() {
                    d.mode_cap = Some(points.clone());
                }
            }
            if self.time.method.is_none() {
                self.time.method = Some("duhamel".into());
            }
            // The first eigenmode unless the kind draws or omits its own data.
            let draws = matches!(kind, ExperimentKind::MaxPrinciple | ExperimentKind::L4);
            if self.initial.is_none() && !draws {
                if let Some(points) = &d.grid_points {
                    self.initial = Some(InitialConfig {
                        kind: "modes".into(),
                        terms: Some(vec![TermConfig { mode: vec![1; points.len()], amplitude: 1.0 }]),
                        decay: None,
                        k: None,
                        amplitude: None,
                    });
                }
            }
        }
        if self.source.is_none() {
            self.source = Some(SourceConfig::zero());
        }
        let p = &mut self.params;
        let t = &mut self.tolerances;
        let (claim, ladder) = match kind {
            ExperimentKind::Heat => (1e-12, 1e-12),
            ExperimentKind::Parabolic => (0.2, 0.2),
            ExperimentKind::MaxPrinciple => (1e-8, 1e-2),
            ExperimentKind::Proportionality => (1e-6, 1e-6),
            ExperimentKind::Decomposition => (1e-10, 1e-3),
            ExperimentKind::L4 => (1e-6, 1e-6),
            ExperimentKind::VSequence => (1e-6, 1e-4),
            ExperimentKind::Mollification => (1e-10, 1e-3),
            ExperimentKind::NsEnergy => (1e-6, 1e-6),
            ExperimentKind::NsUniqueness => (1e-10, 1e-4),
            ExperimentKind::Ladyzhenskaya => (1e-6, 1e-6),
        };
        t.claim.get_or_insert(claim);
        t.ladder.get_or_insert(ladder);
        match kind {
            ExperimentKind::Parabolic => {
                let s = self.time.steps;
                p.step_counts.get_or_insert_with(|| vec![s, 2 * s, 4 * s]);
            }
            ExperimentKind::Decomposition | ExperimentKind::Mollification => {
                p.c.get_or_insert(1.0);
            }
            ExperimentKind::VSequence => {
                p.epsilon.get_or_insert(0.5);
                p.iterations.get_or_insert(10);
                p.init.get_or_insert_with(|| "eps_window".into());
            }
            ExperimentKind::NsEnergy | ExperimentKind::NsUniqueness => {
                p.nu.get_or_insert(0.1);
            }
            ExperimentKind::Ladyzhenskaya => {
                p.decay.get_or_insert(1.0);
            }
            _ => {}
        }
    }

    /// Collects every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let kind = match self.experiment.parse::<ExperimentKind>() {
            Ok(k) => k,
            Err(e) => return Err(LabError::Validation(vec![e])),
        };
        if !is_pos(self.time.horizon) {
            errs.push("time.horizon must be > 0".to_string());
        }
        if self.time.steps == 0 {
            errs.push("time.steps must be >= 1".to_string());
        }
        if self.output_dir.trim().is_empty() {
            errs.push("output_dir must not be empty".to_string());
        }
        if self.seeds.count == 0 {
            errs.push("seeds.count must be >= 1".to_string());
        }
        for (name, v) in [("tolerances.claim", self.tolerances.claim), ("tolerances.ladder", self.tolerances.ladder)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    errs.push(format!("{name} must be finite and >= 0"));
                }
            }
        }
        if kind.is_navier_stokes() {
            self.validate_periodic(kind, &mut errs);
        } else {
            self.validate_parabolic(kind, &mut errs);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(LabError::Validation(errs))
        }
    }

    fn validate_parabolic(&self, kind: ExperimentKind, errs: &mut Vec<String>) {
        let d = &self.domain;
        let dims = match &d.grid_points {
            None => {
                errs.push("domain.grid_points is required".into());
                return;
            }
            Some(p) => p.len(),
        };
        if !(1..=3).contains(&dims) {
            errs.push("domain.grid_points must have 1 to 3 entries".into());
        }
        if d.grid_points.as_ref().unwrap().iter().any(|n| *n < 2) {
            errs.push("domain.grid_points entries must be >= 2".into());
        }
        if let Some(l) = &d.lengths {
            if l.len() != dims || !l.iter().all(|v| is_pos(*v)) {
                errs.push("domain.lengths must match grid_points and be > 0".into());
            }
        }
        if let Some(cap) = &d.mode_cap {
            let pts = d.grid_points.as_ref().unwrap();
            if cap.len() != dims || cap.iter().zip(pts).any(|(c, n)| *c < 1 || c > n) {
                errs.push("domain.mode_cap must satisfy 1 <= cap <= grid_points per axis".into());
            }
        }
        if d.dims.is_some() || d.radius.is_some() {
            errs.push("domain.dims/radius only apply to Navier-Stokes experiments".into());
        }
        if let Some(m) = &self.time.method {
            if let Err(e) = m.parse::<Method>() {
                errs.push(format!("time.method: {e}"));
            }
        }
        let cap = d.mode_cap.clone().unwrap_or_default();
        let source = self.source.as_ref().expect("filled");
        validate_source(source, dims, &cap, false, errs);
        let p = &self.params;
        let needs_bounds = matches!(kind, ExperimentKind::Proportionality | ExperimentKind::VSequence);
        if needs_bounds && source.bounds.is_none() {
            errs.push("source.bounds {c, M} are required for this experiment".into());
        }
        match (kind, &self.initial) {
            (ExperimentKind::MaxPrinciple | ExperimentKind::L4, None) => {}
            (_, None) => errs.push("initial is required".into()),
            (_, Some(init)) => validate_parabolic_initial(init, kind, dims, &cap, errs),
        }
        match kind {
            ExperimentKind::Parabolic => {
                let s = p.step_counts.as_ref().expect("filled");
                if s.len() < 3 || s.windows(2).any(|w| w[1] <= w[0]) || s[0] == 0 {
                    errs.push("params.step_counts must hold >= 3 strictly increasing positive counts".into());
                }
            }
            ExperimentKind::Decomposition | ExperimentKind::Mollification => {
                if !is_pos(p.c.unwrap_or(0.0)) {
                    errs.push("params.c must be > 0".into());
                }
                if kind == ExperimentKind::Mollification {
                    match &p.levels {
                        Some(l) if !l.is_empty() && l.iter().all(|v| *v >= 1) && l.windows(2).all(|w| w[1] > w[0]) => {}
                        _ => errs.push("params.levels must be a nonempty strictly increasing list of levels >= 1".into()),
                    }
                }
            }
            ExperimentKind::VSequence => {
                let e = p.epsilon.unwrap_or(0.0);
                if !(e > 0.0 && e < 1.0) {
                    errs.push("params.epsilon must lie in (0, 1)".into());
                }
                if let Some(init) = &p.init {
                    if let Err(e) = init.parse::<InitialIterate>() {
                        errs.push(format!("params.init: {e}"));
                    }
                }
                if let Some(w) = &p.window {
                    if w.lower.len() != dims || w.upper.len() != dims {
                        errs.push("params.window bounds must have one entry per axis".into());
                    }
                }
            }
            ExperimentKind::MaxPrinciple => {
                if let Some(b) = &p.beta {
                    if b.knots.len() < 2 || b.knots.len() != b.values.len() {
                        errs.push("params.beta needs >= 2 knots and one value per knot".into());
                    } else if (b.knots[b.knots.len() - 1] - self.time.horizon).abs() > 1e-12 * self.time.horizon {
                        errs.push("params.beta knots must end at time.horizon".into());
                    }
                }
                if let Some(w0) = &p.w0 {
                    validate_terms("params.w0", w0, dims, &cap, errs);
                }
            }
            _ => {}
        }
    }

    fn validate_periodic(&self, kind: ExperimentKind, errs: &mut Vec<String>) {
        let d = &self.domain;
        let dims = d.dims.unwrap_or(0);
        if !(2..=3).contains(&dims) {
            errs.push("domain.dims must be 2 or 3".into());
        }
        if kind == ExperimentKind::Ladyzhenskaya && dims != 3 {
            errs.push("ladyzhenskaya uses the 3-D inequality: domain.dims must be 3".into());
        }
        let radius = d.radius.unwrap_or(0);
        if radius < 1 {
            errs.push("domain.radius must be >= 1".into());
        }
        if d.grid_points.is_some() || d.lengths.is_some() || d.mode_cap.is_some() {
            errs.push("domain.grid_points/lengths/mode_cap do not apply to Navier-Stokes experiments".into());
        }
        let source = self.source.as_ref().expect("filled");
        if !matches!(source.kind.as_str(), "zero" | "taylor_green") {
            errs.push(format!("source.kind '{}' is not a Navier-Stokes forcing (zero, taylor_green)", source.kind));
        }
        if source.kind == "taylor_green" && !source.amplitude.is_some_and(f64::is_finite) {
            errs.push("source.amplitude is required for taylor_green forcing".into());
        }
        let p = &self.params;
        if kind != ExperimentKind::Ladyzhenskaya && !is_pos(p.nu.unwrap_or(0.0)) {
            errs.push("params.nu must be > 0".into());
        }
        if let Some(init) = &self.initial {
            match init.kind.as_str() {
                "taylor_green" | "random" => {}
                "single_mode" => {
                    let ok = init.k.as_ref().is_some_and(|k| {
                        k.len() == dims && k.iter().any(|v| *v != 0) && k.iter().all(|v| v.unsigned_abs() as usize <= radius)
                    }) && init.amplitude.as_ref().is_some_and(|a| a.len() == dims);
                    if !ok {
                        errs.push("initial single_mode needs k (nonzero, |k_i| <= radius) and amplitude of length dims".into());
                    }
                }
                other => errs.push(format!("initial.kind '{other}' is not one of taylor_green, random, single_mode")),
            }
            if init.decay.is_some_and(|v| !v.is_finite()) {
                errs.push("initial.decay must be finite".into());
            }
        } else if kind != ExperimentKind::Ladyzhenskaya {
            errs.push("initial is required".into());
        }
        if kind == ExperimentKind::NsEnergy {
            if let Some(s) = &p.step_counts {
                if s.len() != 3 || s.windows(2).any(|w| w[1] != 2 * w[0]) || s[0] == 0 {
                    errs.push("params.step_counts must be three positive counts, each double the previous".into());
                }
            }
        }
        if kind == ExperimentKind::NsUniqueness {
            match &p.n_list {
                Some(l) if !l.is_empty() && l[0] >= 1 && l.windows(2).all(|w| w[1] > w[0]) && l[l.len() - 1] <= radius => {}
                _ => errs.push("params.n_list must be strictly ascending with 1 <= n <= domain.radius".into()),
            }
        }
    }

    pub fn mode_cap(&self) -> Vec<usize> {
        self.domain.mode_cap.clone().expect("validated parabolic config")
    }

    /// Spatial box at resolution factor `f`.
    pub fn box_domain(&self, f: usize) -> Result<BoxDomain> {
        let pts: Vec<usize> = self.domain.grid_points.as_ref().expect("validated").iter().map(|n| n * f).collect();
        BoxDomain::new(self.domain.lengths.as_ref().expect("filled"), &pts)
    }

    pub fn mode_cap_at(&self, f: usize) -> Vec<usize> {
        self.mode_cap().iter().map(|c| c * f).collect()
    }

    pub fn time_grid(&self, f: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.time.horizon, self.time.steps * f)
    }

    pub fn method(&self) -> Method {
        self.time.method.as_deref().unwrap_or("duhamel").parse().expect("validated")
    }

    /// Parabolic source on the box at factor `f`.
    pub fn source_at(&self, f: usize) -> Result<Source> {
        build_source(self.source.as_ref().expect("filled"), &self.box_domain(f)?)
    }

    /// Parabolic initial data on the box at factor `f`.
    pub fn initial_field(&self, f: usize) -> Result<SpectralField> {
        let domain = self.box_domain(f)?;
        let cap = self.mode_cap_at(f);
        match &self.initial {
            None => SpectralField::zeros(&domain, &cap),
            Some(init) => match init.kind.as_str() {
                "zero" => SpectralField::zeros(&domain, &cap),
                "modes" => terms_field(&domain, &cap, init.terms.as_deref().unwrap_or(&[])),
                other => Err(LabError::input(format!("initial kind '{other}' has no fixed field"))),
            },
        }
    }

    pub fn window(&self) -> Option<Window> {
        self.params.window.as_ref().map(|w| Window {
            lower: w.lower.clone(),
            upper: w.upper.clone(),
            t_start: w.t_start,
            t_end: w.t_end,
        })
    }

    pub fn periodic_box(&self) -> Result<PeriodicBox> {
        PeriodicBox::new(self.domain.dims.unwrap_or(0), self.domain.radius.unwrap_or(0))
    }

    /// Navier-Stokes initial velocity.
    pub fn initial_velocity(&self) -> Result<DivFreeField> {
        let pbox = self.periodic_box()?;
        let init = self.initial.as_ref().ok_or_else(|| LabError::input("initial velocity missing"))?;
        match init.kind.as_str() {
            "taylor_green" if pbox.dims() == 2 => DivFreeField::taylor_green_2d(pbox.radius()),
            "taylor_green" => DivFreeField::taylor_green_3d(pbox.radius()),
            "random" => Ok(DivFreeField::random(pbox, self.seeds.base, init.decay.unwrap_or(1.0))),
            "single_mode" => {
                let amp: Vec<Complex64> =
                    init.amplitude.as_ref().unwrap().iter().map(|a| Complex64::new(*a, 0.0)).collect();
                DivFreeField::single_mode(pbox, init.k.as_ref().unwrap(), &amp)
            }
            other => Err(LabError::input(format!("unknown initial kind '{other}'"))),
        }
    }

    pub fn forcing(&self) -> Result<Forcing> {
        let s = self.source.as_ref().expect("filled");
        match s.kind.as_str() {
            "taylor_green" => {
                let pbox = self.periodic_box()?;
                let tg = if pbox.dims() == 2 {
                    DivFreeField::taylor_green_2d(pbox.radius())?
                } else {
                    DivFreeField::taylor_green_3d(pbox.radius())?
                };
                Ok(Forcing::Steady(tg.scaled(s.amplitude.unwrap_or(0.0))))
            }
            _ => Ok(Forcing::None),
        }
    }
}

fn validate_terms(name: &str, terms: &[TermConfig], dims: usize, cap: &[usize], errs: &mut Vec<String>) {
    if terms.is_empty() {
        errs.push(format!("{name} must list at least one term"));
    }
    for (i, t) in terms.iter().enumerate() {
        let in_cap = t.mode.len() == dims && t.mode.iter().zip(cap).all(|(k, c)| *k >= 1 && k <= c);
        if !in_cap {
            errs.push(format!("{name}[{i}].mode must have {dims} entries with 1 <= k <= mode_cap"));
        }
        if !t.amplitude.is_finite() {
            errs.push(format!("{name}[{i}].amplitude must be finite"));
        }
    }
}

fn validate_parabolic_initial(init: &InitialConfig, kind: ExperimentKind, dims: usize, cap: &[usize], errs: &mut Vec<String>) {
    match init.kind.as_str() {
        "zero" => {}
        "modes" => match &init.terms {
            Some(t) => validate_terms("initial.terms", t, dims, cap, errs),
            None => errs.push("initial.terms is required for kind modes".into()),
        },
        "random_two_mode" if kind == ExperimentKind::L4 => {
            if cap.iter().any(|c| *c < 2) {
                errs.push("random_two_mode needs mode_cap >= 2".into());
            }
        }
        other => errs.push(format!("initial.kind '{other}' is not valid here (zero, modes, random_two_mode for l4)")),
    }
}

fn validate_profile(p: &ProfileConfig, errs: &mut Vec<String>) {
    match p.kind.as_str() {
        "constant" => {}
        "exponential" if p.rate.is_some_and(f64::is_finite) => {}
        "linear" if p.slope.is_some_and(f64::is_finite) => {}
        _ => errs.push("source.profile must be constant, exponential {rate} or linear {slope}".into()),
    }
}

fn validate_source(s: &SourceConfig, dims: usize, cap: &[usize], _ns: bool, errs: &mut Vec<String>) {
    if let Some(p) = &s.profile {
        validate_profile(p, errs);
    }
    match s.kind.as_str() {
        "zero" => {}
        "constant" => {
            if !s.value.is_some_and(f64::is_finite) {
                errs.push("source.value is required for a constant source".into());
            }
        }
        "eigenmodes" => match &s.terms {
            Some(t) => validate_terms("source.terms", t, dims, &vec![usize::MAX; dims], errs),
            None => errs.push("source.terms is required for an eigenmodes source".into()),
        },
        "banded_random" => {
            if s.band.as_ref().is_none_or(|b| b.len() != dims || b.iter().any(|v| *v < 1)) {
                errs.push("source.band must have one entry >= 1 per axis".into());
            }
            if s.bounds.is_none() {
                errs.push("source.bounds are required for a banded_random source".into());
            }
        }
        "spectral_power" => {
            if !s.exponent.is_some_and(f64::is_finite) {
                errs.push("source.exponent is required for a spectral_power source".into());
            }
            if s.cap.as_ref().is_none_or(|c| c.len() != dims || c.iter().zip(cap).any(|(a, b)| *a < 1 || a > b)) {
                errs.push("source.cap must satisfy 1 <= cap <= mode_cap per axis".into());
            }
        }
        other => errs.push(format!(
            "source.kind '{other}' is not one of zero, constant, eigenmodes, banded_random, spectral_power"
        )),
    }
    if let Some(b) = &s.bounds {
        if !(b.c > 0.0) {
            errs.push("bounds.c must be > 0".into());
        }
        if !(b.m >= b.c) || !b.m.is_finite() {
            errs.push("bounds.M must be finite and >= bounds.c".into());
        }
    }
}

fn profile_of(p: &Option<ProfileConfig>) -> TimeProfile {
    match p.as_ref().map(|p| p.kind.as_str()) {
        Some("exponential") => TimeProfile::Exponential { rate: p.as_ref().unwrap().rate.unwrap_or(0.0) },
        Some("linear") => TimeProfile::Linear { slope: p.as_ref().unwrap().slope.unwrap_or(0.0) },
        _ => TimeProfile::Constant,
    }
}

fn build_source(s: &SourceConfig, domain: &BoxDomain) -> Result<Source> {
    let base = match s.kind.as_str() {
        "constant" => Source::constant(s.value.unwrap_or(0.0)),
        "eigenmodes" => Source::new(crate::evolution::SourceKind::Eigenmodes {
            terms: s
                .terms
                .iter()
                .flatten()
                .map(|t| ModeTerm { mode: t.mode.clone(), amplitude: t.amplitude })
                .collect(),
            profile: profile_of(&s.profile),
        }),
        "banded_random" => {
            let b = s.bounds.as_ref().expect("validated");
            Source::banded_random(s.seed.unwrap_or(0), b.c, b.m, s.band.clone().unwrap_or_default())
        }
        "spectral_power" => {
            // prod_i k_i^-p: rough when p is small.
            let p = s.exponent.unwrap_or(1.0);
            let cap = s.cap.clone().unwrap_or_default();
            let field = SpectralField::from_modes(domain, &cap, |k| k.iter().map(|v| (*v as f64).powf(-p)).product())?;
            Source::spectral(field, profile_of(&s.profile))
        }
        _ => Source::zero(),
    };
    Ok(match &s.bounds {
        Some(b) if s.kind != "banded_random" => base.with_bounds(b.c, b.m),
        _ => base,
    })
}

fn terms_field(domain: &BoxDomain, cap: &[usize], terms: &[TermConfig]) -> Result<SpectralField> {
    SpectralField::from_modes(domain, cap, |k| {
        terms.iter().filter(|t| t.mode.as_slice() == k).map(|t| t.amplitude).sum()
    })
}
