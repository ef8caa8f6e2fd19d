use crate::error::{LabError, Result};
use crate::evolution::{heat_evolve, parabolic_evolve, Method, Source};
use crate::spectral::{SpectralField, TimeGrid};

use super::max_principle::SIGN_SLACK;

/// `|| |phi| y - |y| phi || / (|y| |phi|)`: zero iff `y` and `phi` are parallel.
pub fn proportionality_residual_of(y: &SpectralField, phi: &SpectralField) -> Result<f64> {
    let (ny, nphi) = (y.l2(), phi.l2());
    if ny == 0.0 || nphi == 0.0 {
        return Err(LabError::degenerate(format!("|y| = {ny}, |phi| = {nphi}: residual undefined")));
    }
    let diff = y.lincomb(nphi, phi, -ny)?;
    Ok(diff.l2() / (ny * nphi))
}

/// Residual of `y(t)` against the free heat flow `phi(t)` at every time node.
#[derive(Debug, Clone)]
pub struct ProportionalitySeries {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub y_norms: Vec<f64>,
    pub phi_norms: Vec<f64>,
}

impl ProportionalitySeries {
    pub fn last(&self) -> f64 {
        *self.residuals.last().unwrap()
    }

    pub fn max(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Solves `y_t - Delta y = u`, `phi_t - Delta phi = 0` from the same `y0`
/// and reports the proportionality residual at every node of `grid`.
///
/// With `enforce_bounds` the source must declare and satisfy `0 < c <= u <= M`.
pub fn proportionality_residual(
    y0: &SpectralField,
    u: &Source,
    grid: &TimeGrid,
    enforce_bounds: bool,
) -> Result<ProportionalitySeries> {
    let min_y0 = y0.to_nodal().min();
    if min_y0 < -SIGN_SLACK {
        return Err(LabError::precondition(format!("y0 >= 0 violated: min y0 = {min_y0}")));
    }
    if enforce_bounds {
        if u.bounds().is_none() {
            return Err(LabError::precondition("source bounds (c, M) must be declared"));
        }
        u.validate(y0.domain(), grid)?;
    }
    let y = parabolic_evolve(y0, u, grid, Method::Duhamel)?;
    let mut series = ProportionalitySeries { times: grid.nodes(), residuals: vec![], y_norms: vec![], phi_norms: vec![] };
    for (m, ym) in y.fields().iter().enumerate() {
        let phi = heat_evolve(y0, grid.node(m))?;
        series.residuals.push(proportionality_residual_of(ym, &phi)?);
        series.y_norms.push(ym.l2());
        series.phi_norms.push(phi.l2());
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::TimeProfile;
    use crate::spectral::BoxDomain;
    use std::f64::consts::PI;

    #[test]
    fn zero_source_is_exactly_proportional() {
        let d = BoxDomain::interval(PI, 64).unwrap();
        let y0 = SpectralField::from_modes(&d, &[8], |k| 1.0 / (k[0] * k[0]) as f64).unwrap();
        let s = proportionality_residual(&y0, &Source::zero(), &TimeGrid::new(1.0, 10).unwrap(), false).unwrap();
        assert!(s.max() < 1e-15);
    }

    #[test]
    fn single_mode_dynamics_stay_parallel() {
        let d = BoxDomain::interval(PI, 64).unwrap();
        let y0 = SpectralField::single_mode(&d, &[8], &[1], 1.0).unwrap();
        let u = Source::eigenmode(vec![1], 2.5, TimeProfile::Constant).with_bounds(0.0, 2.5);
        let s = proportionality_residual(&y0, &u, &TimeGrid::new(1.0, 10).unwrap(), false).unwrap();
        assert!(s.max() <= 1e-12);
    }

    #[test]
    fn bounds_are_required_when_enforced() {
        let d = BoxDomain::interval(PI, 64).unwrap();
        let y0 = SpectralField::single_mode(&d, &[8], &[1], 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        assert!(proportionality_residual(&y0, &Source::constant(1.0), &grid, true).is_err());
        let err = proportionality_residual(&y0, &Source::zero().with_bounds(0.0, 1.0), &grid, true).unwrap_err();
        assert!(err.to_string().contains("bounds.c must be > 0"));
    }

    #[test]
    fn vanishing_norm_is_degenerate() {
        let d = BoxDomain::interval(PI, 64).unwrap();
        let z = SpectralField::zeros(&d, &[4]).unwrap();
        let e = SpectralField::single_mode(&d, &[4], &[1], 1.0).unwrap();
        assert!(matches!(proportionality_residual_of(&z, &e), Err(LabError::Degenerate(_))));
    }
}
