use crate::error::{LabError, Result};
use crate::evolution::{heat_evolve, parabolic_evolve, Method, Source, SourceKind, Trajectory};
use crate::spectral::{to_spectral, NodalField, SpectralField, TimeGrid};

/// `y(t) = lambda1(t) phi1(t) - lambda2(t) phi2(t)` sampled on a time grid.
#[derive(Debug, Clone)]
pub struct LambdaTrajectory {
    pub times: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// `|y - (lambda1 phi1 - lambda2 phi2)| / |y|`.
    pub reconstruction: Vec<f64>,
    /// `|y - (y1 - y2)| / |y|`.
    pub linearity: Vec<f64>,
    pub y: Trajectory,
}

impl LambdaTrajectory {
    pub fn min_lambda(&self) -> f64 {
        self.lambda1.iter().chain(&self.lambda2).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_linearity(&self) -> f64 {
        self.linearity.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_reconstruction(&self) -> f64 {
        self.reconstruction.iter().cloned().fold(0.0, f64::max)
    }
}

fn relative(diff: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        diff / reference
    } else {
        diff
    }
}

/// Splits `y` into two nonnegative problems and measures `lambda_i = |y_i| / |phi_i|`.
///
/// With `u1 = u + |u| + c`, `u2 = |u| + c`, `y01 = y0 + |y0|`, `y02 = |y0|`,
/// linearity gives `y = y1 - y2`. Everything is represented in the full band
/// of the grid so that nodal `|.|` followed by projection keeps this identity
/// at round-off level. Constant sources are split symbolically.
pub fn decompose_lambda(y0: &SpectralField, u: &Source, c: f64, grid: &TimeGrid) -> Result<LambdaTrajectory> {
    if !(c > 0.0) {
        return Err(LabError::precondition("c > 0 violated in the splitting u1 = u + |u| + c"));
    }
    let domain = y0.domain();
    let cap = domain.grid_points().to_vec();
    let y0n = y0.to_nodal();
    let y0w = to_spectral(&y0n, &cap)?;
    let y01 = to_spectral(&y0n.map(|v| v + v.abs()), &cap)?;
    let y02 = to_spectral(&y0n.map(f64::abs), &cap)?;

    let (uw, u1, u2) = match u.kind() {
        SourceKind::Zero => (Source::zero(), Source::constant(c), Source::constant(c)),
        SourceKind::Constant(v) => {
            (Source::constant(*v), Source::constant(v + v.abs() + c), Source::constant(v.abs() + c))
        }
        _ => {
            let samples = u.nodal_samples(domain, grid)?;
            let split = |f: &dyn Fn(f64) -> f64| -> Vec<NodalField> { samples.iter().map(|s| s.map(f)).collect() };
            (
                Source::nodal_series(samples.clone()),
                Source::nodal_series(split(&|v| v + v.abs() + c)),
                Source::nodal_series(split(&|v| v.abs() + c)),
            )
        }
    };

    let y = parabolic_evolve(&y0w, &uw, grid, Method::Duhamel)?;
    let y1 = parabolic_evolve(&y01, &u1, grid, Method::Duhamel)?;
    let y2 = parabolic_evolve(&y02, &u2, grid, Method::Duhamel)?;

    let mut out = LambdaTrajectory {
        times: grid.nodes(),
        lambda1: vec![],
        lambda2: vec![],
        reconstruction: vec![],
        linearity: vec![],
        y: y.clone(),
    };
    for m in 0..grid.len() {
        let t = grid.node(m);
        let phi1 = heat_evolve(&y01, t)?;
        let phi2 = heat_evolve(&y02, t)?;
        let (n1, n2) = (phi1.l2(), phi2.l2());
        if n1 == 0.0 || n2 == 0.0 {
            return Err(LabError::degenerate(format!(
                "|phi_i(t)| = 0 at t = {t} (|phi1| = {n1}, |phi2| = {n2}); lambda undefined"
            )));
        }
        let l1 = y1.at(m).l2() / n1;
        let l2 = y2.at(m).l2() / n2;
        let ym = y.at(m);
        let ny = ym.l2();
        let recon = phi1.lincomb(l1, &phi2, -l2)?;
        out.reconstruction.push(relative(ym.sub(&recon)?.l2(), ny));
        out.linearity.push(relative(ym.sub(&y1.at(m).sub(y2.at(m))?)?.l2(), ny));
        out.lambda1.push(l1);
        out.lambda2.push(l2);
    }
    Ok(out)
}

/// Distances between two consecutive mollification levels.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyRow {
    pub from: usize,
    pub to: usize,
    /// `sup_t |y_from(t) - y_to(t)|`.
    pub y_distance: f64,
    pub lambda1_distance: f64,
    pub lambda2_distance: f64,
}

#[derive(Debug, Clone)]
pub struct MollificationStudy {
    pub levels: Vec<usize>,
    pub runs: Vec<LambdaTrajectory>,
    pub cauchy: Vec<CauchyRow>,
    /// `log2(d_j / d_{j+1})` for consecutive Cauchy distances in `y`.
    pub rates: Vec<f64>,
}

/// Runs [`decompose_lambda`] with the source truncated at each level and
/// compares consecutive levels.
pub fn source_mollification_study(
    u_rough: &Source,
    levels: &[usize],
    y0: &SpectralField,
    c: f64,
    grid: &TimeGrid,
) -> Result<MollificationStudy> {
    if levels.is_empty() || levels.contains(&0) {
        return Err(LabError::input("mollification levels must be nonempty and >= 1"));
    }
    let runs = levels
        .iter()
        .map(|n| decompose_lambda(y0, &u_rough.truncated(*n), c, grid))
        .collect::<Result<Vec<_>>>()?;
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut cauchy = Vec::new();
    for j in 1..runs.len() {
        let (a, b) = (&runs[j - 1], &runs[j]);
        let mut y_distance: f64 = 0.0;
        for (ya, yb) in a.y.fields().iter().zip(b.y.fields()) {
            y_distance = y_distance.max(ya.sub(yb)?.l2());
        }
        cauchy.push(CauchyRow {
            from: levels[j - 1],
            to: levels[j],
            y_distance,
            lambda1_distance: sup(&a.lambda1, &b.lambda1),
            lambda2_distance: sup(&a.lambda2, &b.lambda2),
        });
    }
    let rates = cauchy.windows(2).map(|w| (w[0].y_distance / w[1].y_distance).log2()).collect();
    Ok(MollificationStudy { levels: levels.to_vec(), runs, cauchy, rates })
}
