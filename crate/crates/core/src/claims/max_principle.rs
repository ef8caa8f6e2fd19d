use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::beta::BetaProfile;
use crate::error::{LabError, Result};
use crate::evolution::{evolve_samples, parabolic_evolve, Method, ModeTerm, Source, SourceKind, TimeProfile, Trajectory};
use crate::spectral::{BoxDomain, SpectralField, TimeGrid};

/// Slack allowed on the sign hypotheses of the data.
pub const SIGN_SLACK: f64 = 1e-12;

/// A nonnegative supersolution: `w_t - Delta w = g >= 0`, `w(0) = w0 >= 0`.
#[derive(Debug, Clone)]
pub struct SupersolutionSpec {
    pub w0: SpectralField,
    pub g: Source,
}

impl SupersolutionSpec {
    pub fn new(w0: SpectralField, g: Source) -> Self {
        Self { w0, g }
    }

    /// Checks `w0 >= 0` on its grid and `g >= 0` at every space-time node.
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let min_w0 = self.w0.to_nodal().min();
        if min_w0 < -SIGN_SLACK {
            return Err(LabError::precondition(format!("w0 >= 0 violated: min w0 = {min_w0}")));
        }
        for step in 0..grid.len() {
            let min_g = self.g.nodal_at(self.w0.domain(), grid, step)?.min();
            if min_g < -SIGN_SLACK {
                return Err(LabError::precondition(format!(
                    "g >= 0 violated: min g = {min_g} at t = {}",
                    grid.node(step)
                )));
            }
        }
        Ok(())
    }

    /// `w` on `grid`, in the band of `w0`.
    pub fn solve(&self, grid: &TimeGrid) -> Result<Trajectory> {
        parabolic_evolve(&self.w0, &self.g, grid, Method::Duhamel)
    }

    /// Same data with `w0` padded to `mode_cap` on `domain`.
    pub fn on(&self, domain: &BoxDomain, mode_cap: &[usize]) -> Result<Self> {
        Ok(Self { w0: self.w0.with_mode_cap(mode_cap)?.on_domain(domain)?, g: self.g.clone() })
    }
}

/// Result of one final-time maximum principle check.
#[derive(Debug, Clone)]
pub struct MaxPrincipleOutcome {
    pub z_final: SpectralField,
    /// Largest nodal value of `z(T)`.
    pub max_z: f64,
    /// `max(max |z0|, max_t |beta'(t)| max |w(t)|)`.
    pub scale: f64,
    /// Smallest nodal value of `w` over the space-time grid.
    pub min_w: f64,
}

impl MaxPrincipleOutcome {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_z <= rel_tol * self.scale
    }
}

/// Solves `z_t - Delta z = -beta'(t) w`, `z(0) = z0` and reports the sign of `z(T)`.
///
/// Hypotheses on `beta`, `w` and `z0` are checked first; a violation is a
/// precondition error naming the inequality, never a failed claim.
pub fn max_principle_experiment(
    beta: &BetaProfile,
    w_spec: &SupersolutionSpec,
    z0: &SpectralField,
    grid: &TimeGrid,
) -> Result<MaxPrincipleOutcome> {
    if (beta.horizon() - grid.horizon()).abs() > 1e-12 * grid.horizon() {
        return Err(LabError::input(format!(
            "beta is defined on [0, {}] but the time grid ends at {}",
            beta.horizon(),
            grid.horizon()
        )));
    }
    beta.validate()?;
    w_spec.validate(grid)?;
    let z0_nodal = z0.to_nodal();
    if z0_nodal.max() > SIGN_SLACK {
        return Err(LabError::precondition(format!("z0 <= 0 violated: max z0 = {}", z0_nodal.max())));
    }
    if !w_spec.w0.domain().same_box(z0.domain()) {
        return Err(LabError::input("w0 and z0 live on different boxes"));
    }

    let cap: Vec<usize> = z0.mode_cap().iter().zip(w_spec.w0.mode_cap()).map(|(a, b)| *a.max(b)).collect();
    let w_spec = w_spec.on(z0.domain(), &cap)?;
    let z0 = z0.with_mode_cap(&cap)?;
    let w = w_spec.solve(grid)?;

    let mut source = Vec::with_capacity(grid.len());
    let mut scale = z0_nodal.max_abs();
    let mut min_w = f64::INFINITY;
    for (m, wm) in w.fields().iter().enumerate() {
        let slope = beta.derivative(grid.node(m));
        let nodal = wm.to_nodal();
        min_w = min_w.min(nodal.min());
        scale = scale.max(slope.abs() * nodal.max_abs());
        source.push(wm.scaled(-slope));
    }
    let z = evolve_samples(&z0, &source, grid, Method::Duhamel)?;
    let z_final = z.last().clone();
    let max_z = z_final.to_nodal().max();
    Ok(MaxPrincipleOutcome { z_final, max_z, scale, min_w })
}

/// One randomized admissible configuration.
#[derive(Debug, Clone)]
pub struct MaxPrincipleCase {
    pub beta: BetaProfile,
    pub w: SupersolutionSpec,
    pub z0: SpectralField,
    pub grid: TimeGrid,
}

impl MaxPrincipleCase {
    pub fn run(&self) -> Result<MaxPrincipleOutcome> {
        max_principle_experiment(&self.beta, &self.w, &self.z0, &self.grid)
    }

    /// Same case at `factor` times the grid, band and step count.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let domain = self.z0.domain().refined(factor);
        let cap: Vec<usize> = self.z0.mode_cap().iter().map(|c| c * factor).collect();
        Ok(Self {
            beta: self.beta.clone(),
            w: self.w.on(&domain, &cap)?,
            z0: self.z0.with_mode_cap(&cap)?.on_domain(&domain)?,
            grid: self.grid.refined(factor),
        })
    }
}

/// A nonnegative band-limited field: `a0 e_1 + sum a_k e_k` with
/// `sum |a_k| prod k_i <= a0`, which is pointwise nonnegative because
/// `|sin(k s)| <= k sin(s)` on `[0, pi]`.
pub fn random_nonnegative_modes(rng: &mut impl Rng, dims: usize, band: usize, a0: f64) -> Vec<ModeTerm> {
    let mut terms = vec![ModeTerm { mode: vec![1; dims], amplitude: a0 }];
    let extra = rng.gen_range(0..=3usize);
    let mut budget = a0 * rng.gen_range(0.0..0.95);
    for _ in 0..extra {
        let mode: Vec<usize> = (0..dims).map(|_| rng.gen_range(1..=band)).collect();
        if mode.iter().all(|k| *k == 1) {
            continue;
        }
        let weight: f64 = mode.iter().map(|k| *k as f64).product();
        let share = budget * rng.gen_range(0.2..1.0);
        budget -= share;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        terms.push(ModeTerm { mode, amplitude: sign * share / weight });
    }
    terms
}

fn field_from_terms(domain: &BoxDomain, cap: &[usize], terms: &[ModeTerm]) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(domain, cap)?;
    for t in terms {
        f = f.add(&SpectralField::single_mode(domain, cap, &t.mode, t.amplitude)?)?;
    }
    Ok(f)
}

/// Draws an admissible `(beta, w, z0)` triple from `seed`.
///
/// `beta` is a monotone cubic through five control points whose last value
/// is the largest; `w0`, `g` and `-z0` are nonnegative band-limited fields,
/// with `g` sometimes the constant 1.
pub fn random_admissible_case(seed: u64, domain: &BoxDomain, mode_cap: &[usize], grid: &TimeGrid) -> Result<MaxPrincipleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = domain.dims();
    let band = (*mode_cap.iter().min().unwrap()).min(6);
    let horizon = grid.horizon();

    let knots: Vec<f64> = (0..5).map(|i| horizon * i as f64 / 4.0).collect();
    let mut values: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..1.0)).collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    values.push(peak + rng.gen_range(0.0..0.5));
    let beta = BetaProfile::through_points(knots, values)?;

    let a0 = rng.gen_range(0.5..2.0);
    let w0 = field_from_terms(domain, mode_cap, &random_nonnegative_modes(&mut rng, dims, band, a0))?;
    let g = if rng.gen_bool(0.25) {
        Source::constant(rng.gen_range(0.0..2.0))
    } else {
        let g0 = rng.gen_range(0.0..2.0);
        let terms = random_nonnegative_modes(&mut rng, dims, band, g0);
        Source::new(SourceKind::Eigenmodes { terms, profile: TimeProfile::Exponential { rate: rng.gen_range(-1.0..1.0) } })
    };
    let z0_scale = rng.gen_range(0.0..1.0);
    let z0 = field_from_terms(domain, mode_cap, &random_nonnegative_modes(&mut rng, dims, band, 1.0))?.scaled(-z0_scale);
    Ok(MaxPrincipleCase { beta, w: SupersolutionSpec::new(w0, g), z0, grid: *grid })
}
