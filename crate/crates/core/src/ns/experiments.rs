use rayon::prelude::*;

use super::dynamics::{ns_evolve, Forcing, GalerkinTrajectory};
use super::field::{DivFreeField, VectorField};
use crate::error::{LabError, Result};
use crate::spectral::TimeGrid;

/// Keeps the wavevectors with every `|k_i| <= n`.
pub fn galerkin_truncate(y0: &DivFreeField, n: usize) -> Result<DivFreeField> {
    let pbox = y0.pbox();
    if n < 1 {
        return Err(LabError::input("truncation radius n must be >= 1"));
    }
    if n > pbox.radius() {
        return Err(LabError::input(format!("truncation radius n = {n} exceeds K = {}", pbox.radius())));
    }
    let d = pbox.dims();
    let keep: Vec<bool> = pbox.wavevectors().iter().map(|k| k.iter().all(|v| v.unsigned_abs() as usize <= n)).collect();
    Ok(y0.map_coeffs(|i, c| if keep[i / d] { c } else { c * 0.0 }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessRow {
    pub n: usize,
    /// `|y0 - y0^(n)|`.
    pub initial_gap: f64,
    /// `sup_t |y(t) - y^(n)(t)|`.
    pub d_n: f64,
    /// Smallest `C` with `|y - y^(n)|^2 <= e^{C t} |y0 - y0^(n)|^2` at every node;
    /// undefined when the initial gap vanishes.
    pub c_n: Option<f64>,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct UniquenessTable {
    pub rows: Vec<UniquenessRow>,
    /// `sup_t ||y(t)||_{L4}` of the reference run.
    pub sup_l4: f64,
    /// `D_n` nonincreasing in `n`.
    pub monotone: bool,
    pub reference: GalerkinTrajectory,
}

/// Compares the full-radius solution with solutions started from truncated data.
pub fn uniqueness_experiment(
    y0: &DivFreeField,
    forcing: &Forcing,
    nu: f64,
    n_list: &[usize],
    grid: &TimeGrid,
) -> Result<UniquenessTable> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::input("n_list must be nonempty and strictly ascending"));
    }
    let truncated = n_list.iter().map(|n| galerkin_truncate(y0, *n)).collect::<Result<Vec<_>>>()?;
    let reference = ns_evolve(y0, forcing, nu, grid)?;
    let runs = truncated
        .par_iter()
        .map(|z0| ns_evolve(z0, forcing, nu, grid))
        .collect::<Result<Vec<_>>>()?;
    let times = grid.nodes();
    let mut rows = Vec::with_capacity(n_list.len());
    for ((n, z0), run) in n_list.iter().zip(&truncated).zip(&runs) {
        let initial_gap = y0.lincomb(1.0, z0, -1.0)?.l2();
        let gaps = reference
            .fields
            .iter()
            .zip(&run.fields)
            .map(|(a, b)| Ok(a.lincomb(1.0, b, -1.0)?.l2()))
            .collect::<Result<Vec<f64>>>()?;
        let d_n = gaps.iter().cloned().fold(0.0, f64::max);
        let c_n = (initial_gap > 0.0).then(|| {
            (1..gaps.len())
                .map(|m| (gaps[m] * gaps[m] / (initial_gap * initial_gap)).ln() / times[m])
                .fold(f64::NEG_INFINITY, f64::max)
        });
        rows.push(UniquenessRow { n: *n, initial_gap, d_n, c_n, gaps });
    }
    let monotone = rows.windows(2).all(|w| w[1].d_n <= w[0].d_n);
    let sup_l4 = reference.fields.iter().map(DivFreeField::l4).fold(0.0, f64::max);
    Ok(UniquenessTable { rows, sup_l4, monotone, reference })
}

/// `||v||_{L4} / (sqrt 2 |v|^{1/4} ||grad v||^{3/4})` with L4 on an `m^3` grid.
pub fn ladyzhenskaya_ratio_on(v: &DivFreeField, m: usize) -> Result<f64> {
    if v.pbox().dims() != 3 {
        return Err(LabError::input("the L4 inequality checked here is the 3-D form"));
    }
    let (l2, h1) = (v.l2(), v.h1());
    if l2 == 0.0 || h1 == 0.0 {
        return Err(LabError::degenerate("Ladyzhenskaya ratio of the zero field is undefined"));
    }
    Ok(v.l4_on(m)? / (2f64.sqrt() * l2.powf(0.25) * h1.powf(0.75)))
}

/// [`ladyzhenskaya_ratio_on`] on the smallest exact grid.
pub fn ladyzhenskaya_check(v: &DivFreeField) -> Result<f64> {
    ladyzhenskaya_ratio_on(v, 4 * v.pbox().radius() + 1)
}

/// Max ratio over seeded random fields, evaluated on two quadrature grids.
pub fn ladyzhenskaya_survey(pbox: super::PeriodicBox, seeds: &[u64], decay: f64) -> Result<(f64, f64)> {
    let m = 4 * pbox.radius() + 1;
    let pairs = seeds
        .par_iter()
        .map(|s| {
            let v = DivFreeField::random(pbox, *s, decay);
            Ok((ladyzhenskaya_ratio_on(&v, m)?, ladyzhenskaya_ratio_on(&v, 2 * m)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (f64::max(a, *x), f64::max(b, *y))))
}

/// Projects raw samples and wraps them as per-node forcing.
pub fn forcing_from_samples(raw: &[VectorField]) -> Forcing {
    Forcing::per_node(raw)
}
