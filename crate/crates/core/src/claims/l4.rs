use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::evolution::heat_evolve;
use crate::spectral::{to_spectral, BoxDomain, Norm, SpectralField, TimeGrid};

/// `a e_(1,..,1) + b e_(2,1,..,1)` with `a, b` uniform in `[-1, 1]`.
pub fn random_two_mode(seed: u64, domain: &BoxDomain, mode_cap: &[usize]) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
    SpectralField::from_modes(domain, mode_cap, |k| {
        let rest_one = k[1..].iter().all(|v| *v == 1);
        match (k[0], rest_one) {
            (1, true) => a,
            (2, true) => b,
            _ => 0.0,
        }
    })
}

/// Margins of `phi^2 <= Psi` where `phi` is the heat flow of `y0` and `Psi`
/// the heat flow of `y0^2`.
#[derive(Debug, Clone)]
pub struct L4Comparison {
    pub times: Vec<f64>,
    /// `min_x (Psi - phi^2)` per node.
    pub pointwise: Vec<f64>,
    /// `|Psi|^2 - ||phi||_4^4` per node.
    pub norm_margin: Vec<f64>,
    pub phi_l4: Vec<f64>,
    /// `max y0^2`.
    pub pointwise_scale: f64,
    /// `||y0||_4^4`.
    pub norm_scale: f64,
}

impl L4Comparison {
    pub fn min_pointwise(&self) -> f64 {
        self.pointwise.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_norm_margin(&self) -> f64 {
        self.norm_margin.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.min_pointwise() >= -rel_tol * self.pointwise_scale && self.min_norm_margin() >= -rel_tol * self.norm_scale
    }
}

/// Squaring is done on the nodes and projected to the full band of the grid,
/// so that both margins vanish at `t = 0`.
pub fn l4_comparison(y0: &SpectralField, grid: &TimeGrid) -> Result<L4Comparison> {
    let cap = y0.domain().grid_points().to_vec();
    let y0n = y0.to_nodal();
    let y0w = y0.with_mode_cap(&cap)?;
    let sq = to_spectral(&y0n.map(|v| v * v), &cap)?;
    let mut out = L4Comparison {
        times: grid.nodes(),
        pointwise: vec![],
        norm_margin: vec![],
        phi_l4: vec![],
        pointwise_scale: y0n.max_abs().powi(2),
        norm_scale: y0n.norm(Norm::L4)?.powi(4),
    };
    for t in grid.nodes() {
        let phi = heat_evolve(&y0w, t)?.to_nodal();
        let psi = heat_evolve(&sq, t)?;
        let psin = psi.to_nodal();
        let gap = psin.zip_map(&phi, |p, f| p - f * f)?;
        let l4 = phi.norm(Norm::L4)?;
        out.pointwise.push(gap.min());
        out.norm_margin.push(psi.l2().powi(2) - l4.powi(4));
        out.phi_l4.push(l4);
    }
    Ok(out)
}
