//! Heat and linear parabolic evolution in the sine eigenbasis.
//!
//! Every mode evolves independently, `c_k' = -lambda_k c_k + u_k(t)`. Two
//! integrators are provided: an exponential (Duhamel) rule that integrates
//! the kernel exactly against piecewise-linear source samples, and the
//! Crank-Nicolson trapezoidal rule. They share nothing but the source samples.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::spectral::{to_spectral, BoxDomain, NodalField, SpectralField, TimeGrid};

/// Slack allowed on declared source bounds when sampled.
pub const BOUND_SLACK: f64 = 1e-12;

/// Scalar time modulation of a source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    /// `exp(rate t)`
    Exponential { rate: f64 },
    /// `1 + slope t`
    Linear { slope: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Exponential { rate } => (rate * t).exp(),
            TimeProfile::Linear { slope } => 1.0 + slope * t,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TimeProfile::Constant)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeTerm {
    pub mode: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Zero,
    Constant(f64),
    /// `profile(t) * sum amplitude * e_k(x)`
    Eigenmodes { terms: Vec<ModeTerm>, profile: TimeProfile },
    /// One nodal sample per time node.
    NodalSeries(Vec<NodalField>),
    /// `profile(t) * field(x)`; the field may be rough (H^-1 only).
    Spectral { field: SpectralField, profile: TimeProfile },
    /// Seeded band-limited fluctuation around `(c + M) / 2`, bounded by `[c, M]`.
    BandedRandom { seed: u64, c: f64, m: f64, mode_cap: Vec<usize> },
}

/// Right-hand side `u(x, t)` of a parabolic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    kind: SourceKind,
    bounds: Option<(f64, f64)>,
}

impl Source {
    pub fn new(kind: SourceKind) -> Self {
        let bounds = match &kind {
            SourceKind::BandedRandom { c, m, .. } => Some((*c, *m)),
            _ => None,
        };
        Self { kind, bounds }
    }

    pub fn zero() -> Self {
        Self::new(SourceKind::Zero)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(SourceKind::Constant(value))
    }

    pub fn eigenmode(mode: Vec<usize>, amplitude: f64, profile: TimeProfile) -> Self {
        Self::new(SourceKind::Eigenmodes { terms: vec![ModeTerm { mode, amplitude }], profile })
    }

    pub fn nodal_series(samples: Vec<NodalField>) -> Self {
        Self::new(SourceKind::NodalSeries(samples))
    }

    pub fn spectral(field: SpectralField, profile: TimeProfile) -> Self {
        Self::new(SourceKind::Spectral { field, profile })
    }

    pub fn banded_random(seed: u64, c: f64, m: f64, mode_cap: Vec<usize>) -> Self {
        Self::new(SourceKind::BandedRandom { seed, c, m, mode_cap })
    }

    /// Declares `c <= u <= M`; checked by [`Source::validate`].
    pub fn with_bounds(mut self, c: f64, m: f64) -> Self {
        self.bounds = Some((c, m));
        self
    }

    pub fn without_bounds(mut self) -> Self {
        self.bounds = None;
        self
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// Checks sample counts and, when bounds are declared, `0 < c <= M` and
    /// `c - 1e-12 <= u <= M + 1e-12` on the whole space-time grid.
    pub fn validate(&self, domain: &BoxDomain, grid: &TimeGrid) -> Result<()> {
        if let SourceKind::NodalSeries(samples) = &self.kind {
            if samples.len() != grid.len() {
                return Err(LabError::input(format!(
                    "nodal_series source has {} samples for {} time nodes",
                    samples.len(),
                    grid.len()
                )));
            }
        }
        let Some((c, m)) = self.bounds else {
            return Ok(());
        };
        if !(c > 0.0) {
            return Err(LabError::precondition("bounds.c must be > 0"));
        }
        if c > m {
            return Err(LabError::precondition("bounds.c must be <= bounds.M"));
        }
        for step in 0..grid.len() {
            let u = self.nodal_at(domain, grid, step)?;
            let (lo, hi) = (u.min(), u.max());
            if lo < c - BOUND_SLACK || hi > m + BOUND_SLACK {
                return Err(LabError::precondition(format!(
                    "source leaves [c, M] = [{c}, {m}] at t = {}: range [{lo}, {hi}]",
                    grid.node(step)
                )));
            }
        }
        Ok(())
    }

    /// Sine coefficients of `u(., t_step)` truncated to `mode_cap`.
    ///
    /// Constants, eigenmodes and banded random sources are projected
    /// analytically; nodal samples go through the discrete sine transform.
    pub fn spectral_at(
        &self,
        domain: &BoxDomain,
        mode_cap: &[usize],
        grid: &TimeGrid,
        step: usize,
    ) -> Result<SpectralField> {
        let t = grid.node(step);
        match &self.kind {
            SourceKind::Zero => SpectralField::zeros(domain, mode_cap),
            SourceKind::Constant(v) => SpectralField::constant(domain, mode_cap, *v),
            SourceKind::Eigenmodes { terms, profile } => {
                let mut f = SpectralField::zeros(domain, mode_cap)?;
                let p = profile.value(t);
                for term in terms {
                    let e = SpectralField::single_mode(domain, mode_cap, &term.mode, term.amplitude * p)?;
                    f = f.add(&e)?;
                }
                Ok(f)
            }
            SourceKind::NodalSeries(samples) => {
                let sample = samples.get(step).ok_or_else(|| {
                    LabError::input(format!("nodal_series has no sample for time node {step}"))
                })?;
                if !sample.domain().same_box(domain) {
                    return Err(LabError::input("nodal_series sample lives on another box"));
                }
                to_spectral(sample, mode_cap)
            }
            SourceKind::Spectral { field, profile } => {
                Ok(field.with_mode_cap(mode_cap)?.on_domain(domain)?.scaled(profile.value(t)))
            }
            SourceKind::BandedRandom { seed, c, m, mode_cap: band } => {
                let realization = BandedRealization::new(*seed, band);
                let mid = 0.5 * (c + m);
                let half = 0.5 * (m - c);
                let base = SpectralField::constant(domain, mode_cap, mid)?;
                let fluct = SpectralField::from_modes(domain, mode_cap, |k| realization.coeff(k, t))?;
                base.lincomb(1.0, &fluct, half / realization.norm)
            }
        }
    }

    /// `u(., t_step)` at the interior nodes of `domain`.
    pub fn nodal_at(&self, domain: &BoxDomain, grid: &TimeGrid, step: usize) -> Result<NodalField> {
        let t = grid.node(step);
        match &self.kind {
            SourceKind::Zero => Ok(NodalField::zeros(domain)),
            SourceKind::Constant(v) => Ok(NodalField::zeros(domain).map(|_| *v)),
            SourceKind::Eigenmodes { terms, .. } => {
                let cap = eigenmode_cap(terms, domain.dims());
                self.spectral_at(domain, &cap, grid, step)?.synthesize_on(domain)
            }
            SourceKind::NodalSeries(samples) => {
                let sample = samples.get(step).ok_or_else(|| {
                    LabError::input(format!("nodal_series has no sample for time node {step}"))
                })?;
                if sample.domain() != domain {
                    return Err(LabError::input("nodal_series sample lives on another grid"));
                }
                Ok(sample.clone())
            }
            SourceKind::Spectral { field, profile } => {
                Ok(field.synthesize_on(domain)?.map(|v| v * profile.value(t)))
            }
            SourceKind::BandedRandom { seed, c, m, mode_cap: band } => {
                let realization = BandedRealization::new(*seed, band);
                let mid = 0.5 * (c + m);
                let half = 0.5 * (m - c);
                let fluct = SpectralField::from_modes(domain, band, |k| realization.coeff(k, t))?;
                Ok(fluct.synthesize_on(domain)?.map(|v| mid + half * v / realization.norm))
            }
        }
    }

    pub fn spectral_samples(
        &self,
        domain: &BoxDomain,
        mode_cap: &[usize],
        grid: &TimeGrid,
    ) -> Result<Vec<SpectralField>> {
        self.validate_counts(grid)?;
        (0..grid.len()).map(|m| self.spectral_at(domain, mode_cap, grid, m)).collect()
    }

    pub fn nodal_samples(&self, domain: &BoxDomain, grid: &TimeGrid) -> Result<Vec<NodalField>> {
        self.validate_counts(grid)?;
        (0..grid.len()).map(|m| self.nodal_at(domain, grid, m)).collect()
    }

    fn validate_counts(&self, grid: &TimeGrid) -> Result<()> {
        match &self.kind {
            SourceKind::NodalSeries(s) if s.len() != grid.len() => Err(LabError::input(format!(
                "nodal_series source has {} samples for {} time nodes",
                s.len(),
                grid.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Mode truncation of a spectral source at `level` (mollification).
    /// Other kinds are returned unchanged.
    pub fn truncated(&self, level: usize) -> Source {
        match &self.kind {
            SourceKind::Spectral { field, profile } => Source {
                kind: SourceKind::Spectral { field: field.truncated(level), profile: *profile },
                bounds: self.bounds,
            },
            _ => self.clone(),
        }
    }

    /// `int_0^T sum_k u_k(t)^2 / lambda_k dt` by the trapezoid rule on the grid;
    /// the squared L2(0,T;H^-1) size of the source.
    pub fn h_minus1_energy(&self, domain: &BoxDomain, mode_cap: &[usize], grid: &TimeGrid) -> Result<f64> {
        let samples = self.spectral_samples(domain, mode_cap, grid)?;
        let values: Vec<f64> = samples
            .iter()
            .map(|s| s.norm(crate::spectral::Norm::HMinus1).map(|v| v * v))
            .collect::<Result<_>>()?;
        Ok(trapezoid(&values, grid.dt()))
    }

    /// True for sources known to be constant in time.
    pub fn is_time_constant(&self) -> bool {
        match &self.kind {
            SourceKind::Zero | SourceKind::Constant(_) => true,
            SourceKind::Eigenmodes { profile, .. } | SourceKind::Spectral { profile, .. } => {
                profile.is_constant()
            }
            _ => false,
        }
    }
}

fn eigenmode_cap(terms: &[ModeTerm], dims: usize) -> Vec<usize> {
    let mut cap = vec![1; dims];
    for t in terms {
        for (c, k) in cap.iter_mut().zip(&t.mode) {
            *c = (*c).max(*k);
        }
    }
    cap
}

/// Deterministic coefficients `a_k cos(omega_k t + theta_k)` of a banded source.
struct BandedRealization {
    band: Vec<usize>,
    amps: Vec<f64>,
    freqs: Vec<f64>,
    phases: Vec<f64>,
    /// `sum |a_k|`, a bound on the sup norm of the fluctuation.
    norm: f64,
}

impl BandedRealization {
    fn new(seed: u64, band: &[usize]) -> Self {
        let n: usize = band.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps = Vec::with_capacity(n);
        let mut freqs = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for _ in 0..n {
            amps.push(rng.gen_range(-1.0..1.0));
            freqs.push(rng.gen_range(0.0..2.0 * PI));
            phases.push(rng.gen_range(0.0..2.0 * PI));
        }
        let norm = amps.iter().map(|a: &f64| a.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        Self { band: band.to_vec(), amps, freqs, phases, norm }
    }

    fn coeff(&self, k: &[usize], t: f64) -> f64 {
        if k.iter().zip(&self.band).any(|(k, b)| k > b) {
            return 0.0;
        }
        let mut idx = 0;
        for (ki, b) in k.iter().zip(&self.band) {
            idx = idx * b + (ki - 1);
        }
        self.amps[idx] * (self.freqs[idx] * t + self.phases[idx]).cos()
    }
}

/// Time integrator for the spectral ODE system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Duhamel,
    CrankNicolson,
}

impl FromStr for Method {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duhamel" => Ok(Method::Duhamel),
            "crank_nicolson" => Ok(Method::CrankNicolson),
            other => Err(LabError::input(format!("unknown integrator '{other}'"))),
        }
    }
}

/// One spectral field per node of a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    fields: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, fields: Vec<SpectralField>) -> Result<Self> {
        if fields.len() != grid.len() {
            return Err(LabError::shape(format!(
                "{} fields for {} time nodes",
                fields.len(),
                grid.len()
            )));
        }
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.domain() != first.domain() || f.mode_cap() != first.mode_cap()) {
                return Err(LabError::shape("trajectory fields live on different domains"));
            }
        }
        Ok(Self { grid, fields })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn at(&self, step: usize) -> &SpectralField {
        &self.fields[step]
    }

    pub fn last(&self) -> &SpectralField {
        self.fields.last().expect("trajectory has at least one node")
    }

    /// `a * self + b * other`, node by node.
    pub fn lincomb(&self, a: f64, other: &Trajectory, b: f64) -> Result<Trajectory> {
        if self.grid != other.grid {
            return Err(LabError::shape("trajectories on different time grids"));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(x, y)| x.lincomb(a, y, b))
            .collect::<Result<_>>()?;
        Ok(Trajectory { grid: self.grid, fields })
    }
}

/// Exact heat propagator `c_k -> exp(-lambda_k t) c_k`.
pub fn heat_evolve(y0: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LabError::input(format!("heat evolution time must be >= 0, got {t}")));
    }
    let lambdas = y0.eigenvalues();
    Ok(y0.map_coeffs(|i, c| c * (-lambdas[i] * t).exp()))
}

/// Solution at time `s` of the backward heat problem `-eta_t - Delta eta = 0`
/// with terminal data `eta(T) = eta_terminal`.
pub fn backward_heat(eta_terminal: &SpectralField, s: f64, horizon: f64) -> Result<SpectralField> {
    if !(0.0..=horizon).contains(&s) {
        return Err(LabError::input(format!("backward time {s} outside [0, {horizon}]")));
    }
    heat_evolve(eta_terminal, horizon - s)
}

/// Solves `y_t - Delta y = u`, `y(0) = y0` on `grid`.
pub fn parabolic_evolve(y0: &SpectralField, u: &Source, grid: &TimeGrid, method: Method) -> Result<Trajectory> {
    let samples = u.spectral_samples(y0.domain(), y0.mode_cap(), grid)?;
    evolve_samples(y0, &samples, grid, method)
}

/// Same as [`parabolic_evolve`] with the source already projected per node.
pub fn evolve_samples(
    y0: &SpectralField,
    samples: &[SpectralField],
    grid: &TimeGrid,
    method: Method,
) -> Result<Trajectory> {
    if samples.len() != grid.len() {
        return Err(LabError::input(format!(
            "{} source samples for {} time nodes",
            samples.len(),
            grid.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| !s.domain().same_box(y0.domain()) || s.mode_cap() != y0.mode_cap()) {
        return Err(LabError::input(format!(
            "source sample (box {:?}, cap {:?}) inconsistent with initial data (box {:?}, cap {:?})",
            s.domain().lengths(),
            s.mode_cap(),
            y0.domain().lengths(),
            y0.mode_cap()
        )));
    }
    let h = grid.dt();
    let lambdas = y0.eigenvalues();
    let stepper: Vec<[f64; 3]> = match method {
        Method::Duhamel => lambdas.iter().map(|l| exponential_weights(*l, h)).collect(),
        Method::CrankNicolson => lambdas
            .iter()
            .map(|l| {
                let d = 1.0 + 0.5 * l * h;
                [(1.0 - 0.5 * l * h) / d, 0.5 * h / d, 0.5 * h / d]
            })
            .collect(),
    };
    let mut fields = Vec::with_capacity(grid.len());
    let mut current = y0.clone();
    fields.push(current.clone());
    for m in 0..grid.steps() {
        let (old, new) = (samples[m].coeffs(), samples[m + 1].coeffs());
        current = current.map_coeffs(|i, c| {
            let [e, w_old, w_new] = stepper[i];
            e * c + w_old * old[i] + w_new * new[i]
        });
        fields.push(current.clone());
    }
    Trajectory::new(*grid, fields)
}

/// `[exp(-lambda h), w_old, w_new]` with
/// `int_0^h exp(-lambda (h - s)) (u_old (1 - s/h) + u_new s/h) ds = w_old u_old + w_new u_new`.
fn exponential_weights(lambda: f64, h: f64) -> [f64; 3] {
    let x = lambda * h;
    let e = (-x).exp();
    // phi1(x) = (1 - e^-x) / x, g(x) = (1 - e^-x - x e^-x) / x^2
    let (phi1, g) = if x < 0.2 {
        // phi1 = sum (-x)^n / (n+1)!, g = sum (-x)^n (n+1) / (n+2)!
        let mut phi1 = 0.0;
        let mut g = 0.0;
        let mut term = 1.0; // (-x)^n / n!
        for n in 0..24 {
            phi1 += term / (n + 1) as f64;
            g += term / (n + 2) as f64;
            term *= -x / (n + 1) as f64;
        }
        (phi1, g)
    } else {
        let one_minus_e = -(-x).exp_m1();
        (one_minus_e / x, (one_minus_e - x * e) / (x * x))
    };
    [e, h * g, h * (phi1 - g)]
}

/// Minimum nodal value over every node of the trajectory, on its own grid.
pub fn positivity_check(traj: &Trajectory) -> f64 {
    traj.fields().iter().map(|f| f.to_nodal().min()).fold(f64::INFINITY, f64::min)
}

/// Minimum over the trajectory sampled on another grid of the same box.
pub fn positivity_check_on(traj: &Trajectory, domain: &BoxDomain) -> Result<f64> {
    traj.fields()
        .iter()
        .map(|f| f.synthesize_on(domain).map(|n| n.min()))
        .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * values[0] + values[1..n - 1].iter().sum::<f64>() + 0.5 * values[n - 1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interval(n: usize) -> BoxDomain {
        BoxDomain::interval(PI, n).unwrap()
    }

    fn sine(n: usize, cap: usize) -> SpectralField {
        SpectralField::single_mode(&interval(n), &[cap], &[1], 1.0).unwrap()
    }

    #[test]
    fn exponential_weights_match_quadrature() {
        for &(lambda, h) in &[(1.0, 1e-3), (4.0, 0.05), (100.0, 0.1), (1.0, 0.2), (9.0, 0.01)] {
            let [e, wo, wn] = exponential_weights(lambda, h);
            // Simpson oracle with many panels
            let n = 2000;
            let f = |s: f64, w: &dyn Fn(f64) -> f64| (-lambda * (h - s)).exp() * w(s);
            let simpson = |w: &dyn Fn(f64) -> f64| {
                let dx = h / n as f64;
                let mut acc = f(0.0, w) + f(h, w);
                for i in 1..n {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dx, w);
                }
                acc * dx / 3.0
            };
            assert_relative_eq!(e, (-lambda * h).exp(), max_relative = 1e-15);
            assert_relative_eq!(wo, simpson(&|s| 1.0 - s / h), max_relative = 1e-10);
            assert_relative_eq!(wn, simpson(&|s| s / h), max_relative = 1e-10);
        }
    }

    #[test]
    fn weights_are_continuous_across_series_switch() {
        let a = exponential_weights(1.0, 0.2 - 1e-12);
        let b = exponential_weights(1.0, 0.2 + 1e-12);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn heat_single_mode_decay() {
        let y1 = heat_evolve(&sine(32, 8), 1.0).unwrap();
        assert_relative_eq!(y1.coeff(&[1]), 0.36787944117144233, max_relative = 1e-15);
        assert_eq!(heat_evolve(&sine(32, 8), 0.0).unwrap(), sine(32, 8));
        assert!(heat_evolve(&sine(32, 8), -0.1).is_err());
    }

    #[test]
    fn heat_semigroup() {
        let d = interval(32);
        let y0 = SpectralField::from_modes(&d, &[8], |k| 1.0 / k[0] as f64).unwrap();
        let a = heat_evolve(&heat_evolve(&y0, 0.3).unwrap(), 0.7).unwrap();
        let b = heat_evolve(&y0, 1.0).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn backward_heat_terminal_and_decay() {
        let eta = sine(32, 8);
        assert_eq!(backward_heat(&eta, 2.0, 2.0).unwrap(), eta);
        let e = backward_heat(&eta, 1.0, 2.0).unwrap();
        assert_relative_eq!(e.coeff(&[1]), (-1.0f64).exp(), max_relative = 1e-15);
        assert!(backward_heat(&eta, 2.5, 2.0).is_err());
        assert!(backward_heat(&eta, -0.5, 2.0).is_err());
    }

    #[test]
    fn projected_indicator_is_its_own_terminal_value() {
        let d = interval(256);
        let ind = NodalField::from_fn(&d, |x| if (1.0..2.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let p = to_spectral(&ind, &[32]).unwrap();
        assert_eq!(backward_heat(&p, 1.5, 1.5).unwrap(), p);
    }

    #[test]
    fn nonnegative_bump_stays_nonnegative_backwards() {
        // sin^5 x = (10 sin x - 5 sin 3x + sin 5x) / 16 >= 0
        let d = interval(64);
        let bump = SpectralField::from_modes(&d, &[8], |k| match k[0] {
            1 => 10.0 / 16.0,
            3 => -5.0 / 16.0,
            5 => 1.0 / 16.0,
            _ => 0.0,
        })
        .unwrap();
        let fine = interval(1024);
        for s in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let eta = backward_heat(&bump, s, 1.0).unwrap();
            assert!(eta.synthesize_on(&fine).unwrap().min() >= -1e-6);
        }
    }

    #[test]
    fn steady_state_with_eigenmode_source() {
        let y0 = sine(32, 8);
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let u = Source::eigenmode(vec![1], 1.0, TimeProfile::Constant);
        for method in [Method::Duhamel, Method::CrankNicolson] {
            let traj = parabolic_evolve(&y0, &u, &grid, method).unwrap();
            for f in traj.fields() {
                for (a, b) in f.coeffs().iter().zip(y0.coeffs()) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_source_reduces_to_heat() {
        let d = interval(32);
        let y0 = SpectralField::from_modes(&d, &[8], |k| (k[0] as f64).sin()).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let traj = parabolic_evolve(&y0, &Source::zero(), &grid, Method::Duhamel).unwrap();
        for (m, f) in traj.fields().iter().enumerate() {
            let h = heat_evolve(&y0, grid.node(m)).unwrap();
            for (a, b) in f.coeffs().iter().zip(h.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_source_matches_duhamel_series() {
        let y0 = SpectralField::zeros(&interval(128), &[32]).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let traj = parabolic_evolve(&y0, &Source::constant(1.0), &grid, Method::Duhamel).unwrap();
        for k in 1..=9usize {
            let kk = (k * k) as f64;
            let expected = if k % 2 == 1 { 4.0 / (k as f64 * PI) * (1.0 - (-kk).exp()) / kk } else { 0.0 };
            assert!((traj.last().coeff(&[k]) - expected).abs() < 1e-13, "k = {k}");
        }
        // (4 / pi)(1 - 1/e)
        assert_relative_eq!(traj.last().coeff(&[1]), 0.8048408925406094, max_relative = 1e-13);
    }

    #[test]
    fn nodal_series_needs_one_sample_per_node() {
        let d = interval(16);
        let y0 = SpectralField::zeros(&d, &[4]).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let u = Source::nodal_series(vec![NodalField::zeros(&d); 3]);
        assert!(parabolic_evolve(&y0, &u, &grid, Method::Duhamel).is_err());
        let u = Source::nodal_series(vec![NodalField::zeros(&d); 5]);
        assert!(parabolic_evolve(&y0, &u, &grid, Method::Duhamel).is_ok());
    }

    #[test]
    fn inconsistent_domain_is_rejected() {
        let y0 = SpectralField::zeros(&interval(16), &[4]).unwrap();
        let other = BoxDomain::interval(1.0, 16).unwrap();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let samples = vec![SpectralField::zeros(&other, &[4]).unwrap(); 3];
        assert!(evolve_samples(&y0, &samples, &grid, Method::Duhamel).is_err());
    }

    #[test]
    fn positivity_of_heat_and_sources() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let y0 = sine(64, 16);
        let heat = parabolic_evolve(&y0, &Source::zero(), &grid, Method::Duhamel).unwrap();
        assert!(positivity_check(&heat) >= -1e-10);
        let forced = parabolic_evolve(&y0, &Source::constant(1.0), &grid, Method::Duhamel).unwrap();
        assert!(positivity_check_on(&forced, &interval(512)).unwrap() >= -1e-8);
        let neg = parabolic_evolve(&y0.scaled(-1.0), &Source::zero(), &grid, Method::Duhamel).unwrap();
        let min = positivity_check(&neg);
        assert!(min < 0.0);
        assert_relative_eq!(min, -y0.to_nodal().max_abs(), max_relative = 1e-14);
    }

    #[test]
    fn banded_random_source_respects_bounds() {
        let d = BoxDomain::new(&[PI, 2.0], &[16, 12]).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let u = Source::banded_random(7, 0.5, 2.0, vec![3, 2]);
        u.validate(&d, &grid).unwrap();
        // the analytic projection matches the discrete transform of the samples
        let a = u.spectral_at(&d, &[3, 2], &grid, 3).unwrap();
        let nodal = u.nodal_at(&d, &grid, 3).unwrap();
        let fine = d.refined(16);
        let b = to_spectral(&u.nodal_at(&fine, &grid, 3).unwrap(), &[3, 2]).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-3);
        }
        assert!(nodal.min() >= 0.5 - 1e-12 && nodal.max() <= 2.0 + 1e-12);
    }

    #[test]
    fn bound_violations_are_preconditions() {
        let d = interval(16);
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let u = Source::constant(1.0).with_bounds(0.0, 2.0);
        assert!(matches!(u.validate(&d, &grid), Err(LabError::Precondition(m)) if m.contains("bounds.c must be > 0")));
        let u = Source::constant(3.0).with_bounds(1.0, 2.0);
        assert!(matches!(u.validate(&d, &grid), Err(LabError::Precondition(_))));
    }

    #[test]
    fn h_minus1_energy_of_rough_source() {
        let d = interval(256);
        let rough = SpectralField::from_modes(&d, &[256], |k| 1.0 / k[0] as f64).unwrap();
        let u = Source::spectral(rough, TimeProfile::Constant);
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let e = u.h_minus1_energy(&d, &[256], &grid).unwrap();
        // sum 1/k^4 * pi/2, truncated
        let expected: f64 = (1..=256).map(|k| 1.0 / (k as f64).powi(4)).sum::<f64>() * PI / 2.0;
        assert_relative_eq!(e, expected, max_relative = 1e-12);
    }
}
