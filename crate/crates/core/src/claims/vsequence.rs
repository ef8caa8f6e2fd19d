//! Monotone iteration `v_{k+1} = max(v~_k, v_k)` towards a source whose
//! response at the final time is parallel to the response to `u`.

use std::str::FromStr;

use super::beta::{BetaProfile, MIN_SAMPLES};
use super::max_principle::SupersolutionSpec;
use super::proportionality::proportionality_residual_of;
use crate::error::{LabError, Result};
use crate::evolution::{evolve_samples, Method, Source, TimeProfile, Trajectory};
use crate::spectral::{to_spectral, BoxDomain, NodalField, SpectralField, TimeGrid};

/// Tolerance on the sign diagnostic `s_k`.
pub const SIGN_TOL: f64 = 1e-6;
/// Tolerance on `0 <= v_k <= v_{k+1} <= u`.
pub const MONOTONE_TOL: f64 = 1e-10;

const INEQ_CAP: &str = "beta' <= (|y(T)| - |Psi(T)|) c / sup w";
const INEQ_WINDOW: &str = "beta' < -|Psi(T)| sup_window u / inf_window w on I";

/// Space-time window `omega x I`, closed on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
}

impl Window {
    /// Centred sub-box of half the side and the centred half interval.
    pub fn centered(domain: &BoxDomain, horizon: f64) -> Self {
        Self {
            lower: domain.lengths().iter().map(|l| 0.25 * l).collect(),
            upper: domain.lengths().iter().map(|l| 0.75 * l).collect(),
            t_start: 0.25 * horizon,
            t_end: 0.75 * horizon,
        }
    }

    pub fn validate(&self, domain: &BoxDomain, horizon: f64) -> Result<()> {
        let l = domain.lengths();
        if self.lower.len() != l.len() || self.upper.len() != l.len() {
            return Err(LabError::input("window dimension differs from the domain"));
        }
        let inside = self.lower.iter().zip(&self.upper).zip(l).all(|((a, b), l)| 0.0 <= *a && a < b && *b <= *l);
        let proper = self.lower.iter().zip(&self.upper).zip(l).any(|((a, b), l)| *a > 0.0 || b < l);
        if !inside || !proper {
            return Err(LabError::input("window omega must be a proper sub-box of the domain"));
        }
        if !(0.0 < self.t_start && self.t_start < self.t_end && self.t_end < horizon) {
            return Err(LabError::input(format!(
                "window interval I = ({}, {}) must satisfy 0 < start < end < T = {horizon}",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((x, a), b)| {
            let slack = 1e-12 * b.abs().max(1.0);
            *x >= a - slack && *x <= b + slack
        })
    }

    fn contains_time(&self, t: f64) -> bool {
        let slack = 1e-12 * self.t_end.max(1.0);
        t >= self.t_start - slack && t <= self.t_end + slack
    }
}

/// Initial iterate of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialIterate {
    /// `v_1 = eps u` on the window, zero elsewhere.
    #[default]
    EpsilonOnWindow,
    /// `v_1 = eps u` everywhere.
    EpsilonEverywhere,
}

impl FromStr for InitialIterate {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps_window" => Ok(Self::EpsilonOnWindow),
            "eps_everywhere" => Ok(Self::EpsilonEverywhere),
            other => Err(LabError::input(format!(
                "unknown initial iterate '{other}' (expected eps_window or eps_everywhere)"
            ))),
        }
    }
}

/// Fixed data of a run: `y0`, `u`, the window and the reference `y(T)`.
///
/// Everything lives in the full band of the spatial grid so that nodal
/// sources and their projections correspond one to one.
#[derive(Debug, Clone)]
pub struct VSequenceProblem {
    pub grid: TimeGrid,
    pub window: Window,
    pub epsilon: f64,
    pub c: f64,
    pub m: f64,
    y0: SpectralField,
    u: Vec<NodalField>,
    space_mask: Vec<bool>,
    time_mask: Vec<bool>,
    sup_u_window: f64,
    y_final: SpectralField,
}

impl VSequenceProblem {
    pub fn new(y0: &SpectralField, u: &Source, grid: &TimeGrid, window: Window, epsilon: f64) -> Result<Self> {
        let domain = y0.domain().clone();
        let (c, m) = u.bounds().ok_or_else(|| LabError::precondition("source bounds (c, M) must be declared"))?;
        u.validate(&domain, grid)?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(LabError::input(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        window.validate(&domain, grid.horizon())?;
        let min_y0 = y0.to_nodal().min();
        if min_y0 < -1e-12 {
            return Err(LabError::precondition(format!("y0 >= 0 violated: min y0 = {min_y0}")));
        }
        let space_mask: Vec<bool> =
            (0..domain.num_nodes()).map(|i| window.contains_point(&domain.node_coords(i))).collect();
        let time_mask: Vec<bool> = grid.nodes().into_iter().map(|t| window.contains_time(t)).collect();
        if !space_mask.contains(&true) || !time_mask.contains(&true) {
            return Err(LabError::input("window omega x I contains no grid nodes"));
        }
        let cap = domain.grid_points().to_vec();
        let y0 = y0.with_mode_cap(&cap)?;
        let u = u.nodal_samples(&domain, grid)?;
        let mut sup_u_window = f64::NEG_INFINITY;
        for (um, inside_t) in u.iter().zip(&time_mask) {
            if *inside_t {
                for (v, inside_x) in um.values().iter().zip(&space_mask) {
                    if *inside_x {
                        sup_u_window = sup_u_window.max(*v);
                    }
                }
            }
        }
        let mut problem = Self {
            grid: *grid,
            window,
            epsilon,
            c,
            m,
            y_final: y0.clone(),
            y0,
            u,
            space_mask,
            time_mask,
            sup_u_window,
        };
        problem.y_final = problem.response(&problem.u)?.last().clone();
        if problem.y_final.l2() == 0.0 {
            return Err(LabError::degenerate("|y(T)| = 0"));
        }
        Ok(problem)
    }

    pub fn domain(&self) -> &BoxDomain {
        self.y0.domain()
    }

    pub fn y_final(&self) -> &SpectralField {
        &self.y_final
    }

    pub fn sup_u_window(&self) -> f64 {
        self.sup_u_window
    }

    fn in_window(&self, step: usize, node: usize) -> bool {
        self.time_mask[step] && self.space_mask[node]
    }

    /// Solution of `Psi_t - Delta Psi = v`, `Psi(0) = y0`.
    pub fn response(&self, v: &[NodalField]) -> Result<Trajectory> {
        let cap = self.y0.mode_cap().to_vec();
        let samples = v.iter().map(|f| to_spectral(f, &cap)).collect::<Result<Vec<_>>>()?;
        evolve_samples(&self.y0, &samples, &self.grid, Method::Duhamel)
    }

    pub fn initial_state(&self, init: InitialIterate) -> Result<VSequenceState> {
        let v: Vec<NodalField> = self
            .u
            .iter()
            .enumerate()
            .map(|(step, um)| {
                let vals = um
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| match init {
                        InitialIterate::EpsilonEverywhere => self.epsilon * x,
                        InitialIterate::EpsilonOnWindow if self.in_window(step, i) => self.epsilon * x,
                        InitialIterate::EpsilonOnWindow => 0.0,
                    })
                    .collect();
                NodalField::new(self.domain().clone(), vals)
            })
            .collect::<Result<_>>()?;
        self.state_from(1, v)
    }

    fn state_from(&self, k: usize, v: Vec<NodalField>) -> Result<VSequenceState> {
        let psi_final = self.response(&v)?.last().clone();
        let psi_norm = psi_final.l2();
        Ok(VSequenceState { k, v, psi_final, psi_norm })
    }

    /// Supersolution with its nodal samples and the sup / inf needed by the bounds.
    pub fn prepare(&self, spec: SupersolutionSpec, label: impl Into<String>) -> Result<PreparedSupersolution> {
        spec.validate(&self.grid)?;
        let cap = self.y0.mode_cap().to_vec();
        let spec = spec.on(self.domain(), &cap)?;
        let traj = spec.solve(&self.grid)?;
        let nodal: Vec<NodalField> = traj.fields().iter().map(|f| f.to_nodal()).collect();
        let sup = nodal.iter().map(|f| f.max()).fold(f64::NEG_INFINITY, f64::max);
        let mut inf_window = f64::INFINITY;
        for (step, wm) in nodal.iter().enumerate() {
            for (i, v) in wm.values().iter().enumerate() {
                if self.in_window(step, i) {
                    inf_window = inf_window.min(*v);
                }
            }
        }
        if !(inf_window > 0.0) {
            return Err(LabError::precondition(format!(
                "inf of w over the window must be > 0 (got {inf_window})"
            )));
        }
        Ok(PreparedSupersolution { label: label.into(), spec, nodal, sup, inf_window })
    }

    /// Upper cap on `beta'` over `[0, T]` and the slope that `beta'` must
    /// stay strictly below on `I`, for the current iterate.
    pub fn slope_bounds(&self, state: &VSequenceState, w: &PreparedSupersolution) -> Result<SlopeBounds> {
        let y_norm = self.y_final.l2();
        let gap = y_norm - state.psi_norm;
        if !(gap > 1e-14 * y_norm) {
            return Err(LabError::degenerate(format!(
                "|y(T)| = {y_norm} and |Psi(T)| = {} coincide; the step is undefined",
                state.psi_norm
            )));
        }
        Ok(SlopeBounds {
            cap: gap * self.c / w.sup,
            window_slope: -state.psi_norm * self.sup_u_window / w.inf_window,
        })
    }
}

/// A supersolution sampled on the problem grid.
#[derive(Debug, Clone)]
pub struct PreparedSupersolution {
    pub label: String,
    pub spec: SupersolutionSpec,
    nodal: Vec<NodalField>,
    /// `sup w` over the space-time grid.
    pub sup: f64,
    /// `inf w` over the window nodes; the achieved strict positivity margin.
    pub inf_window: f64,
}

/// `beta' <= cap` on `[0, T]` and `beta' < window_slope` on `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeBounds {
    pub cap: f64,
    pub window_slope: f64,
}

impl SlopeBounds {
    /// Verifies both inequalities on at least 1000 samples plus every grid
    /// node, naming the first violated one.
    pub fn check(&self, beta: &BetaProfile, problem: &VSequenceProblem) -> Result<()> {
        let horizon = problem.grid.horizon();
        let n = MIN_SAMPLES;
        let mut times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        times.extend(problem.grid.nodes());
        for &t in &times {
            let d = beta.derivative(t);
            if d > self.cap {
                return Err(LabError::Infeasible {
                    inequality: INEQ_CAP.into(),
                    detail: format!("beta'({t}) = {d} exceeds {}", self.cap),
                });
            }
        }
        let (a, b) = (problem.window.t_start, problem.window.t_end);
        let mut window_times: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        window_times.extend(problem.grid.nodes().into_iter().filter(|t| problem.window.contains_time(*t)));
        for t in window_times {
            let d = beta.derivative(t);
            if !(d < self.window_slope) {
                return Err(LabError::Infeasible {
                    inequality: INEQ_WINDOW.into(),
                    detail: format!("beta'({t}) = {d} is not below {}", self.window_slope),
                });
            }
        }
        Ok(())
    }
}

/// One iterate `v_k` with its final-time response.
#[derive(Debug, Clone)]
pub struct VSequenceState {
    pub k: usize,
    /// `v_k` at every time node.
    pub v: Vec<NodalField>,
    pub psi_final: SpectralField,
    pub psi_norm: f64,
}

/// Diagnostics of a single step `v_k -> v_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub k: usize,
    pub w_label: String,
    pub slope_cap: f64,
    pub window_slope: f64,
    pub descent_slope: f64,
    pub inf_w_window: f64,
    /// `max (|Psi_{v_k}(T)| y(T) - |y(T)| Psi_{v_{k+1}}(T))` on the nodes.
    pub sign: f64,
    /// `min (v_{k+1} - v_k)`.
    pub min_increment: f64,
    /// `max (v_{k+1} - u)`.
    pub max_excess: f64,
    pub min_v: f64,
    /// `max |v_{k+1} - eps u|` on the window nodes.
    pub pinning: f64,
    /// `|v_{k+1} - v_k|` in `L2(Omega x (0, T))`.
    pub increment_norm: f64,
    pub psi_norm: f64,
    pub residual: f64,
}

impl StepDiagnostics {
    pub fn monotone(&self) -> bool {
        self.min_increment >= -MONOTONE_TOL && self.max_excess <= MONOTONE_TOL && self.min_v >= -MONOTONE_TOL
    }
}

/// `v~ = (|Psi_{v_k}(T)| u + beta' w) / |y(T)|` at every node.
pub fn vtilde(problem: &VSequenceProblem, state: &VSequenceState, beta: &BetaProfile, w: &PreparedSupersolution) -> Result<Vec<NodalField>> {
    let y_norm = problem.y_final.l2();
    problem
        .u
        .iter()
        .zip(&w.nodal)
        .enumerate()
        .map(|(step, (um, wm))| {
            let slope = beta.derivative(problem.grid.node(step));
            um.zip_map(wm, |u, w| (state.psi_norm * u + slope * w) / y_norm)
        })
        .collect()
}

/// One step of the iteration after checking both slope inequalities.
pub fn vtilde_step(
    problem: &VSequenceProblem,
    state: &VSequenceState,
    beta: &BetaProfile,
    w: &PreparedSupersolution,
) -> Result<(VSequenceState, StepDiagnostics)> {
    let bounds = problem.slope_bounds(state, w)?;
    bounds.check(beta, problem)?;
    beta.validate()?;
    let vt = vtilde(problem, state, beta, w)?;
    let next: Vec<NodalField> =
        vt.iter().zip(&state.v).map(|(a, b)| a.zip_map(b, f64::max)).collect::<Result<_>>()?;
    let next = problem.state_from(state.k + 1, next)?;

    let mut min_increment = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut pinning: f64 = 0.0;
    let mut sq = Vec::with_capacity(problem.grid.len());
    let cell = problem.domain().cell_volume();
    for step in 0..problem.grid.len() {
        let (vn, vo, um) = (next.v[step].values(), state.v[step].values(), problem.u[step].values());
        let mut acc = 0.0;
        for i in 0..vn.len() {
            let inc = vn[i] - vo[i];
            acc += inc * inc;
            min_increment = min_increment.min(inc);
            max_excess = max_excess.max(vn[i] - um[i]);
            min_v = min_v.min(vn[i]);
            if problem.in_window(step, i) {
                pinning = pinning.max((vn[i] - problem.epsilon * um[i]).abs());
            }
        }
        sq.push(acc * cell);
    }
    let increment_norm = crate::evolution::trapezoid(&sq, problem.grid.dt()).sqrt();
    let y_norm = problem.y_final.l2();
    let gap = problem.y_final.lincomb(state.psi_norm, &next.psi_final, -y_norm)?;
    let sign = gap.to_nodal().max();
    let residual = proportionality_residual_of(&next.psi_final, &problem.y_final)?;
    let diag = StepDiagnostics {
        k: next.k,
        w_label: w.label.clone(),
        slope_cap: bounds.cap,
        window_slope: bounds.window_slope,
        descent_slope: -beta.derivative(0.5 * (problem.window.t_start + problem.window.t_end)),
        inf_w_window: w.inf_window,
        sign,
        min_increment,
        max_excess,
        min_v,
        pinning,
        increment_norm,
        psi_norm: next.psi_norm,
        residual,
    };
    Ok((next, diag))
}

/// Profile that is flat before `I`, falls with slope `-descent` on `I`,
/// climbs back with slope `climb` right after `I` and is flat once it has
/// recovered its initial height. Transitions are cubic ramps of width `ramp`.
///
/// Returns `None` when the climb cannot recover the drop before `T`.
pub fn window_profile(horizon: f64, t_start: f64, t_end: f64, descent: f64, climb: f64, ramp: f64) -> Result<Option<BetaProfile>> {
    let r1 = ramp.min(0.5 * t_start);
    let r2 = ramp.min(0.25 * (horizon - t_end));
    let drop = descent * (0.5 * r1 + (t_end - t_start));
    let lift = drop - 0.5 * (climb - descent) * r2;
    // Linear climb length so that the final height is the initial one.
    let run = ((lift - 0.5 * climb * r2) / climb).max(0.0);
    let t_flat = t_end + r2 + run;
    if t_flat + r2 > horizon {
        return Ok(None);
    }
    let h = 1.0 + drop + 0.5 * descent * r2;
    let mut knots = vec![0.0, t_start - r1, t_start, t_end, t_end + r2];
    let mut slopes = vec![0.0, 0.0, -descent, -descent, climb];
    let mut values = vec![h, h, h - 0.5 * descent * r1, h - drop];
    values.push(values[3] + 0.5 * (climb - descent) * r2);
    if run > 0.0 {
        knots.push(t_flat);
        slopes.push(climb);
        values.push(values[4] + climb * run);
    }
    knots.push(t_flat + r2);
    slopes.push(0.0);
    values.push(values.last().unwrap() + 0.5 * climb * r2);
    if t_flat + r2 < horizon {
        knots.push(horizon);
        slopes.push(0.0);
        values.push(*values.last().unwrap());
    } else {
        *knots.last_mut().unwrap() = horizon;
    }
    let beta = BetaProfile::hermite(knots, values, slopes)?;
    Ok(beta.validate().is_ok().then_some(beta))
}

/// Declared search family: supersolutions `w0 = a e_1` with `g` either the
/// constant 1 or `e_1`, and window profiles over a geometric ladder of
/// descent slopes `B (1 + 2^-j)` and ramp widths.
pub fn supersolution_family(domain: &BoxDomain) -> Result<Vec<(String, SupersolutionSpec)>> {
    let first = vec![1; domain.dims()];
    let mut out = Vec::new();
    for a in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let w0 = SpectralField::single_mode(domain, &first, &first, a)?;
        out.push((format!("w0={a}e1,g=1"), SupersolutionSpec::new(w0.clone(), Source::constant(1.0))));
        out.push((format!("w0={a}e1,g=e1"), SupersolutionSpec::new(w0, Source::eigenmode(first.clone(), 1.0, TimeProfile::Constant))));
    }
    Ok(out)
}

/// Picks `(beta, w)` from the family for the current iterate.
///
/// Supersolutions are ranked by the ratio of the two slope bounds; within
/// the best feasible one the gentlest descent and the narrowest ramp are
/// preferred, which keeps the growth of `Psi` smallest.
pub fn select_profile(
    problem: &VSequenceProblem,
    state: &VSequenceState,
    family: &[PreparedSupersolution],
) -> Result<(BetaProfile, usize)> {
    let mut ranked: Vec<(f64, usize)> = Vec::new();
    for (i, w) in family.iter().enumerate() {
        let b = problem.slope_bounds(state, w)?;
        ranked.push((b.cap / -b.window_slope.min(-f64::MIN_POSITIVE), i));
    }
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let (t_start, t_end, horizon) = (problem.window.t_start, problem.window.t_end, problem.grid.horizon());
    let gap = t_start.min(horizon - t_end);
    let mut best_detail = String::new();
    for (ratio, i) in &ranked {
        let b = problem.slope_bounds(state, &family[*i])?;
        let climb = b.cap * (1.0 - 1e-9);
        for j in (0..=10).rev() {
            let descent = -b.window_slope * (1.0 + 0.5f64.powi(j));
            for r in (2..=6).rev() {
                let ramp = gap * 0.5f64.powi(r);
                if let Some(beta) = window_profile(horizon, t_start, t_end, descent.max(f64::MIN_POSITIVE), climb, ramp)? {
                    if b.check(&beta, problem).is_ok() {
                        return Ok((beta, *i));
                    }
                }
            }
        }
        if best_detail.is_empty() {
            best_detail = format!(
                "best supersolution {} gives cap {:.6e} vs required descent {:.6e} (ratio {:.4}); the climb after I cannot recover the drop on I",
                family[*i].label, b.cap, -b.window_slope, ratio
            );
        }
    }
    Err(LabError::Infeasible { inequality: INEQ_CAP.into(), detail: best_detail })
}

/// Run parameters.
#[derive(Debug, Clone)]
pub struct VSequenceConfig {
    pub y0: SpectralField,
    pub u: Source,
    pub grid: TimeGrid,
    pub window: Option<Window>,
    pub epsilon: f64,
    pub iterations: usize,
    pub init: InitialIterate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// No profile in the declared family satisfies the named inequality.
    FamilyExhausted { at: usize, inequality: String, detail: String },
}

#[derive(Debug, Clone)]
pub struct VSequenceReport {
    pub initial_psi_norm: f64,
    pub y_norm: f64,
    pub initial_residual: f64,
    pub steps: Vec<StepDiagnostics>,
    pub termination: Termination,
    pub final_state: VSequenceState,
}

impl VSequenceReport {
    pub fn final_residual(&self) -> f64 {
        self.steps.last().map_or(self.initial_residual, |s| s.residual)
    }

    pub fn max_sign(&self) -> f64 {
        self.steps.iter().map(|s| s.sign).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_pinning(&self) -> f64 {
        self.steps.iter().map(|s| s.pinning).fold(0.0, f64::max)
    }

    pub fn all_monotone(&self) -> bool {
        self.steps.iter().all(StepDiagnostics::monotone)
    }
}

/// Runs up to `iterations` steps with automatic profile selection.
pub fn v_sequence_run(config: &VSequenceConfig) -> Result<VSequenceReport> {
    let window = config.window.clone().unwrap_or_else(|| Window::centered(config.y0.domain(), config.grid.horizon()));
    let problem = VSequenceProblem::new(&config.y0, &config.u, &config.grid, window, config.epsilon)?;
    let family = supersolution_family(problem.domain())?
        .into_iter()
        .map(|(label, spec)| problem.prepare(spec, label))
        .collect::<Result<Vec<_>>>()?;
    let mut state = problem.initial_state(config.init)?;
    let y_norm = problem.y_final.l2();
    let initial_psi_norm = state.psi_norm;
    let initial_residual = proportionality_residual_of(&state.psi_final, &problem.y_final)?;
    let mut steps = Vec::new();
    let mut termination = Termination::Completed;
    for _ in 0..config.iterations {
        let chosen = select_profile(&problem, &state, &family);
        let (beta, i) = match chosen {
            Ok(c) => c,
            Err(LabError::Infeasible { inequality, detail }) => {
                termination = Termination::FamilyExhausted { at: state.k, inequality, detail };
                break;
            }
            Err(e) => return Err(e),
        };
        let (next, diag) = vtilde_step(&problem, &state, &beta, &family[i])?;
        steps.push(diag);
        state = next;
    }
    Ok(VSequenceReport { initial_psi_norm, y_norm, initial_residual, steps, termination, final_state: state })
}
