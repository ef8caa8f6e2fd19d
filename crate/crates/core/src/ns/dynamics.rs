use num_complex::Complex64;

use super::field::{leray_project, DivFreeField, Grid, PeriodicBox, VectorField};
use crate::error::{LabError, Result};
use crate::spectral::TimeGrid;

/// Trajectories whose norm exceeds this multiple of the initial norm abort.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Dealiased grid size: products of two retained fields do not alias back
/// onto retained modes, and triple products integrate exactly.
fn dealiased_size(pbox: PeriodicBox) -> usize {
    3 * pbox.radius() + 1
}

/// Velocity components and their gradients on the dealiased grid.
struct GridField {
    u: Vec<Vec<f64>>,
    /// `du[i][j] = d_i u_j`.
    du: Vec<Vec<Vec<f64>>>,
}

fn synthesize(v: &VectorField, grid: &Grid, with_gradient: bool) -> GridField {
    let pbox = v.pbox();
    let d = pbox.dims();
    let ks = pbox.wavevectors();
    let comp = |f: &dyn Fn(usize) -> Complex64| {
        let mut data = grid.scatter(pbox, f);
        grid.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect::<Vec<f64>>()
    };
    let u = (0..d).map(|j| comp(&|m| v.coeffs()[m * d + j])).collect();
    let du = if with_gradient {
        (0..d)
            .map(|i| (0..d).map(|j| comp(&|m| v.coeffs()[m * d + j] * Complex64::new(0.0, ks[m][i] as f64))).collect())
            .collect()
    } else {
        Vec::new()
    };
    GridField { u, du }
}

/// `b(u, v, w) = sum_ij int u_i (d_i v_j) w_j dx`, exact by dealiased quadrature.
pub fn trilinear_b(u: &DivFreeField, v: &DivFreeField, w: &DivFreeField) -> Result<f64> {
    let pbox = u.pbox();
    pbox.check_same(&v.pbox())?;
    pbox.check_same(&w.pbox())?;
    let d = pbox.dims();
    let grid = Grid::new(d, dealiased_size(pbox));
    let gu = synthesize(u.as_vector(), &grid, false);
    let gv = synthesize(v.as_vector(), &grid, true);
    let gw = synthesize(w.as_vector(), &grid, false);
    let mut sum = 0.0;
    for p in 0..grid.len() {
        for i in 0..d {
            for j in 0..d {
                sum += gu.u[i][p] * gv.du[i][j][p] * gw.u[j][p];
            }
        }
    }
    Ok(sum * pbox.volume() / grid.len() as f64)
}

/// `P[(y . grad) y]` truncated to the retained modes.
pub fn convective_term(y: &DivFreeField) -> DivFreeField {
    let pbox = y.pbox();
    let d = pbox.dims();
    let grid = Grid::new(d, dealiased_size(pbox));
    let g = synthesize(y.as_vector(), &grid, true);
    let mut out = VectorField::zeros(pbox);
    for j in 0..d {
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|p| Complex64::new((0..d).map(|i| g.u[i][p] * g.du[i][j][p]).sum(), 0.0))
            .collect();
        grid.forward(&mut data);
        grid.gather(&data, pbox, |m, c| out.coeffs[m * d + j] = c);
    }
    leray_project(&out)
}

/// Divergence-free body force, constant or given per time node.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    None,
    Steady(DivFreeField),
    PerNode(Vec<DivFreeField>),
}

impl Forcing {
    /// Leray-projects raw per-node forcing.
    pub fn per_node(raw: &[VectorField]) -> Self {
        Forcing::PerNode(raw.iter().map(leray_project).collect())
    }

    fn check(&self, pbox: PeriodicBox, grid: &TimeGrid) -> Result<()> {
        match self {
            Forcing::None => Ok(()),
            Forcing::Steady(f) => f.pbox().check_same(&pbox),
            Forcing::PerNode(fs) => {
                if fs.len() != grid.len() {
                    return Err(LabError::input(format!("{} forcing samples for {} time nodes", fs.len(), grid.len())));
                }
                fs.iter().try_for_each(|f| f.pbox().check_same(&pbox))
            }
        }
    }

    /// Forcing at `step + theta`, linear between nodes.
    fn at(&self, step: usize, theta: f64) -> Option<DivFreeField> {
        match self {
            Forcing::None => None,
            Forcing::Steady(f) => Some(f.clone()),
            Forcing::PerNode(fs) => {
                if theta == 0.0 {
                    Some(fs[step].clone())
                } else {
                    Some(fs[step].lincomb(1.0 - theta, &fs[step + 1], theta).expect("same box"))
                }
            }
        }
    }

    /// `(f(t_m), y)` in `L2`.
    fn pairing(&self, step: usize, y: &DivFreeField) -> f64 {
        self.at(step, 0.0).map_or(0.0, |f| inner(&f, y))
    }
}

/// `(u, v)` in `L2` of the torus.
pub fn inner(u: &DivFreeField, v: &DivFreeField) -> f64 {
    u.pbox().volume() * u.coeffs().iter().zip(v.coeffs()).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
}

/// Galerkin solution sampled at every time node.
#[derive(Debug, Clone)]
pub struct GalerkinTrajectory {
    pub grid: TimeGrid,
    pub nu: f64,
    pub fields: Vec<DivFreeField>,
    pub forcing: Forcing,
}

impl GalerkinTrajectory {
    pub fn last(&self) -> &DivFreeField {
        self.fields.last().unwrap()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.l2().powi(2)).collect()
    }

    pub fn dissipation(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.h1().powi(2)).collect()
    }

    pub fn max_divergence(&self) -> f64 {
        self.fields.iter().map(DivFreeField::max_divergence).fold(0.0, f64::max)
    }

    /// `| |y(T)|^2 - |y0|^2 + 2 nu int ||grad y||^2 - 2 int (f, y) |`,
    /// integrals by Simpson's rule (trapezoid for an odd step count).
    pub fn energy_balance_residual(&self) -> f64 {
        let e = self.energies();
        let integrand: Vec<f64> = self
            .fields
            .iter()
            .enumerate()
            .map(|(m, y)| 2.0 * self.nu * y.h1().powi(2) - 2.0 * self.forcing.pairing(m, y))
            .collect();
        (e[e.len() - 1] - e[0] + quadrature(&integrand, self.grid.dt())).abs()
    }
}

fn quadrature(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    if n % 2 == 1 || n == 0 {
        return crate::evolution::trapezoid(values, h);
    }
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

fn viscous_factors(pbox: PeriodicBox, nu: f64, dt: f64) -> Vec<f64> {
    pbox.wavevectors()
        .iter()
        .flat_map(|k| {
            let kk: f64 = k.iter().map(|v| (v * v) as f64).sum();
            std::iter::repeat((-nu * kk * dt).exp()).take(pbox.dims())
        })
        .collect()
}

fn apply(factors: &[f64], y: &DivFreeField) -> DivFreeField {
    y.map_coeffs(|i, c| c * factors[i])
}

/// `F(y) = -P[(y . grad) y] + f`.
fn rhs(y: &DivFreeField, f: Option<DivFreeField>) -> DivFreeField {
    let n = convective_term(y);
    match f {
        Some(f) => f.lincomb(1.0, &n, -1.0).expect("same box"),
        None => n.scaled(-1.0),
    }
}

/// Integrates `dy/dt = -nu |k|^2 y - P[(y . grad) y] + f` with the
/// integrating-factor (Lawson) fourth-order Runge-Kutta scheme; the viscous
/// factor `exp(-nu |k|^2 dt)` is applied exactly.
pub fn ns_evolve(y0: &DivFreeField, forcing: &Forcing, nu: f64, grid: &TimeGrid) -> Result<GalerkinTrajectory> {
    if !(nu > 0.0) {
        return Err(LabError::input(format!("viscosity nu = {nu} must be > 0")));
    }
    let pbox = y0.pbox();
    forcing.check(pbox, grid)?;
    let h = grid.dt();
    let full = viscous_factors(pbox, nu, h);
    let half = viscous_factors(pbox, nu, 0.5 * h);
    let limit = BLOWUP_FACTOR * y0.l2();
    let mut fields = Vec::with_capacity(grid.len());
    let mut y = y0.clone();
    fields.push(y.clone());
    for m in 0..grid.steps() {
        let a = rhs(&y, forcing.at(m, 0.0)).scaled(h);
        let b = rhs(&apply(&half, &y.lincomb(1.0, &a, 0.5)?), forcing.at(m, 0.5)).scaled(h);
        let c = rhs(&apply(&half, &y).lincomb(1.0, &b, 0.5)?, forcing.at(m, 0.5)).scaled(h);
        let d = rhs(&apply(&full, &y).lincomb(1.0, &apply(&half, &c), 1.0)?, forcing.at(m + 1, 0.0)).scaled(h);
        let mid = apply(&half, &b.lincomb(1.0, &c, 1.0)?);
        let incr = apply(&full, &a).lincomb(1.0, &mid, 2.0)?.lincomb(1.0, &d, 1.0)?;
        y = apply(&full, &y).lincomb(1.0, &incr, 1.0 / 6.0)?;
        let norm = y.l2();
        if !norm.is_finite() || (limit > 0.0 && norm > limit) {
            return Err(LabError::Divergence(format!(
                "|y| = {norm} at t = {} exceeds {BLOWUP_FACTOR:e} |y0|",
                grid.node(m + 1)
            )));
        }
        fields.push(y.clone());
    }
    Ok(GalerkinTrajectory { grid: *grid, nu, fields, forcing: forcing.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn skew_symmetry_holds_for_random_triples() {
        for dims in [2, 3] {
            let b = PeriodicBox::new(dims, 3).unwrap();
            let u = DivFreeField::random(b, 1, 1.0);
            let v = DivFreeField::random(b, 2, 1.0);
            let w = DivFreeField::random(b, 3, 1.0);
            let scale = u.l2() * v.h1() * w.h1();
            assert!(trilinear_b(&u, &v, &v).unwrap().abs() <= 1e-12 * scale);
            let s = trilinear_b(&u, &v, &w).unwrap() + trilinear_b(&u, &w, &v).unwrap();
            assert!(s.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let y0 = DivFreeField::taylor_green_2d(4).unwrap();
        let nu = 0.1;
        let traj = ns_evolve(&y0, &Forcing::None, nu, &TimeGrid::new(1.0, 20).unwrap()).unwrap();
        let exact = y0.scaled((-2.0 * nu).exp());
        assert!(traj.last().lincomb(1.0, &exact, -1.0).unwrap().l2() < 1e-8 * y0.l2());
    }

    #[test]
    fn single_mode_follows_stokes_decay() {
        let b = PeriodicBox::new(3, 2).unwrap();
        let a = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.5), Complex64::new(0.0, 0.0)];
        let y0 = DivFreeField::single_mode(b, &[2, 0, 0], &a).unwrap();
        let traj = ns_evolve(&y0, &Forcing::None, 0.3, &TimeGrid::new(1.0, 10).unwrap()).unwrap();
        let exact = y0.scaled((-0.3f64 * 4.0).exp());
        assert!(traj.last().lincomb(1.0, &exact, -1.0).unwrap().l2() < 1e-10);
    }

    #[test]
    fn energy_is_dissipated() {
        let y0 = DivFreeField::random(PeriodicBox::new(3, 3).unwrap(), 11, 1.5);
        let traj = ns_evolve(&y0, &Forcing::None, 0.5, &TimeGrid::new(0.5, 80).unwrap()).unwrap();
        let e = traj.energies();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
        assert!(traj.energy_balance_residual() <= 1e-6 * e[0]);
        assert!(traj.max_divergence() <= 1e-10);
    }

    #[test]
    fn steady_forcing_balances_viscosity() {
        // f = 2 nu * TG gives the steady Taylor-Green state; Lawson stepping
        // reproduces it only up to its O(dt^4) forcing error.
        let y0 = DivFreeField::taylor_green_2d(2).unwrap();
        let nu = 0.2;
        let f = Forcing::Steady(y0.scaled(2.0 * nu));
        let traj = ns_evolve(&y0, &f, nu, &TimeGrid::new(1.0, 10).unwrap()).unwrap();
        assert!(traj.last().lincomb(1.0, &y0, -1.0).unwrap().l2() < 1e-8);
        assert!(traj.energy_balance_residual() < 1e-6 * y0.l2().powi(2));
    }

    #[test]
    fn rejects_bad_viscosity_and_sample_counts() {
        let y0 = DivFreeField::taylor_green_2d(1).unwrap();
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(ns_evolve(&y0, &Forcing::None, 0.0, &g).is_err());
        assert!(ns_evolve(&y0, &Forcing::PerNode(vec![y0.clone()]), 1.0, &g).is_err());
    }
}
