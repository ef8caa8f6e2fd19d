//! Dirichlet sine eigenbasis on axis-aligned boxes.
//!
//! A box `(0, L_1) x ... x (0, L_d)` carries a uniform grid of interior nodes
//! `x_j = j L / (n + 1)`, `j = 1..=n`, per axis. Spectral fields hold
//! coefficients of `prod_i sin(k_i pi x_i / L_i)` for `1 <= k_i <= cap_i`;
//! nodal fields hold values at the interior nodes. Both are stored row-major
//! with the last axis varying fastest.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};

/// Axis-aligned box `prod (0, L_i)` with a uniform interior grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
    grid_points: Vec<usize>,
}

impl BoxDomain {
    pub fn new(lengths: &[f64], grid_points: &[usize]) -> Result<Self> {
        let dims = lengths.len();
        if !(1..=3).contains(&dims) {
            return Err(LabError::input(format!("dims must be 1, 2 or 3, got {dims}")));
        }
        if grid_points.len() != dims {
            return Err(LabError::shape(format!(
                "{} grid sizes given for a {dims}-dimensional box",
                grid_points.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(LabError::input(format!("box lengths must be finite and > 0, got {l}")));
        }
        if let Some(n) = grid_points.iter().find(|n| **n < 4) {
            return Err(LabError::input(format!("grid_points must be >= 4 per axis, got {n}")));
        }
        Ok(Self { lengths: lengths.to_vec(), grid_points: grid_points.to_vec() })
    }

    /// The interval `(0, length)` with `n` interior nodes.
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        Self::new(&[length], &[n])
    }

    pub fn dims(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn grid_points(&self) -> &[usize] {
        &self.grid_points
    }

    pub fn num_nodes(&self) -> usize {
        self.grid_points.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.grid_points[axis] + 1) as f64
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// `int prod sin^2(k_i pi x_i / L_i) dx`, the squared norm of every basis function.
    pub fn mode_mass(&self) -> f64 {
        self.lengths.iter().map(|l| 0.5 * l).product()
    }

    /// Coordinate of node `j` (0-based) along `axis`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        (j + 1) as f64 * self.spacing(axis)
    }

    /// Coordinates of the node with flat index `flat`.
    pub fn node_coords(&self, flat: usize) -> Vec<f64> {
        unravel(flat, &self.grid_points)
            .into_iter()
            .enumerate()
            .map(|(axis, j)| self.node(axis, j))
            .collect()
    }

    /// Same box with a different grid.
    pub fn with_grid(&self, grid_points: &[usize]) -> Result<Self> {
        Self::new(&self.lengths, grid_points)
    }

    /// Same box with the grid refined by `factor` per axis.
    pub fn refined(&self, factor: usize) -> Self {
        let grid: Vec<usize> = self.grid_points.iter().map(|n| n * factor).collect();
        Self { lengths: self.lengths.clone(), grid_points: grid }
    }

    /// True when both describe the same physical box (grids may differ).
    pub fn same_box(&self, other: &BoxDomain) -> bool {
        self.lengths == other.lengths
    }

    fn check_same_box(&self, other: &BoxDomain) -> Result<()> {
        if self.same_box(other) {
            Ok(())
        } else {
            Err(LabError::input(format!(
                "domain mismatch: box {:?} vs {:?}",
                self.lengths, other.lengths
            )))
        }
    }
}

/// The `(0, T)` interval with `steps` uniform steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(LabError::input(format!("time horizon must be > 0, got {horizon}")));
        }
        if steps == 0 {
            return Err(LabError::input("time grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `t_m = m T / steps`; the last node is exactly `T`.
    pub fn node(&self, m: usize) -> f64 {
        if m == self.steps {
            self.horizon
        } else {
            m as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.node(m)).collect()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { horizon: self.horizon, steps: self.steps * factor }
    }
}

/// Norms used throughout the laboratory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    L4,
    H10,
    HMinus1,
}

impl FromStr for Norm {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L2" | "l2" => Ok(Norm::L2),
            "L4" | "l4" => Ok(Norm::L4),
            "H1_0" | "h1_0" | "H10" => Ok(Norm::H10),
            "H_minus1" | "h_minus1" | "H-1" => Ok(Norm::HMinus1),
            other => Err(LabError::input(format!("unknown norm tag '{other}'"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Norm::L2 => "L2",
            Norm::L4 => "L4",
            Norm::H10 => "H1_0",
            Norm::HMinus1 => "H_minus1",
        };
        f.write_str(s)
    }
}

/// Values of a scalar field on the interior grid of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    domain: BoxDomain,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(domain: BoxDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.num_nodes() {
            return Err(LabError::shape(format!(
                "nodal field has {} values, grid {:?} needs {}",
                values.len(),
                domain.grid_points(),
                domain.num_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::input("nodal field contains non-finite values"));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: &BoxDomain) -> Self {
        Self { values: vec![0.0; domain.num_nodes()], domain: domain.clone() }
    }

    /// Samples `f(x)` at every interior node.
    pub fn from_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..domain.num_nodes()).map(|i| f(&domain.node_coords(i))).collect();
        Self::new(domain.clone(), values)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { domain: self.domain.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip_map(&self, other: &NodalField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(LabError::shape("nodal fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self { domain: self.domain.clone(), values })
    }

    /// Composite trapezoid rule on the interior grid; boundary values are zero.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.domain.cell_volume() * self.values.iter().map(|v| f(*v)).sum::<f64>()
    }

    /// L2 and L4 by trapezoid quadrature; H1_0 and H^-1 need a spectral field.
    pub fn norm(&self, which: Norm) -> Result<f64> {
        match which {
            Norm::L2 => Ok(self.integrate(|v| v * v).sqrt()),
            Norm::L4 => Ok(self.integrate(|v| v.powi(4)).sqrt().sqrt()),
            other => Err(LabError::input(format!("norm {other} requires a spectral field"))),
        }
    }
}

/// Coefficients of a scalar field in the Dirichlet sine eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: BoxDomain,
    mode_cap: Vec<usize>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(domain: BoxDomain, mode_cap: Vec<usize>, coeffs: Vec<f64>) -> Result<Self> {
        check_mode_cap(&domain, &mode_cap)?;
        let expected: usize = mode_cap.iter().product();
        if coeffs.len() != expected {
            return Err(LabError::shape(format!(
                "{} coefficients for mode cap {:?} (expected {expected})",
                coeffs.len(),
                mode_cap
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LabError::input("spectral field contains non-finite coefficients"));
        }
        Ok(Self { domain, mode_cap, coeffs })
    }

    pub fn zeros(domain: &BoxDomain, mode_cap: &[usize]) -> Result<Self> {
        Self::new(domain.clone(), mode_cap.to_vec(), vec![0.0; mode_cap.iter().product()])
    }

    /// `amplitude * prod sin(k_i pi x_i / L_i)`.
    pub fn single_mode(domain: &BoxDomain, mode_cap: &[usize], k: &[usize], amplitude: f64) -> Result<Self> {
        let mut f = Self::zeros(domain, mode_cap)?;
        let idx = f.index_of(k).ok_or_else(|| {
            LabError::input(format!("mode {k:?} outside mode cap {mode_cap:?}"))
        })?;
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    /// Coefficients given by `f(k)` for every multi-index `k` (1-based).
    pub fn from_modes(domain: &BoxDomain, mode_cap: &[usize], f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let n: usize = mode_cap.iter().product();
        let coeffs = (0..n).map(|i| f(&mode_of(i, mode_cap))).collect();
        Self::new(domain.clone(), mode_cap.to_vec(), coeffs)
    }

    /// Exact sine coefficients of the constant `value`, truncated to `mode_cap`:
    /// `value * prod_i 4 / (k_i pi)` when every `k_i` is odd, zero otherwise.
    pub fn constant(domain: &BoxDomain, mode_cap: &[usize], value: f64) -> Result<Self> {
        Self::from_modes(domain, mode_cap, |k| {
            if k.iter().all(|ki| ki % 2 == 1) {
                value * k.iter().map(|ki| 4.0 / (*ki as f64 * PI)).product::<f64>()
            } else {
                0.0
            }
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn mode_cap(&self) -> &[usize] {
        &self.mode_cap
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Multi-index (1-based) of coefficient `i`.
    pub fn mode(&self, i: usize) -> Vec<usize> {
        mode_of(i, &self.mode_cap)
    }

    fn index_of(&self, k: &[usize]) -> Option<usize> {
        if k.len() != self.mode_cap.len() {
            return None;
        }
        let mut idx = 0;
        for (ki, cap) in k.iter().zip(&self.mode_cap) {
            if *ki == 0 || ki > cap {
                return None;
            }
            idx = idx * cap + (ki - 1);
        }
        Some(idx)
    }

    /// Coefficient of mode `k`; zero outside the retained band.
    pub fn coeff(&self, k: &[usize]) -> f64 {
        self.index_of(k).map_or(0.0, |i| self.coeffs[i])
    }

    /// `-Delta` eigenvalue of every retained mode, in storage order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| eigenvalue_unchecked(&self.mode(i), self.domain.lengths()))
            .collect()
    }

    /// Smallest Dirichlet eigenvalue of the box.
    pub fn lambda_min(&self) -> f64 {
        eigenvalue_unchecked(&vec![1; self.domain.dims()], self.domain.lengths())
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| f(i, *c)).collect();
        Self { domain: self.domain.clone(), mode_cap: self.mode_cap.clone(), coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_coeffs(|_, c| a * c)
    }

    /// `a * self + b * other`; both must share box and mode cap.
    pub fn lincomb(&self, a: f64, other: &SpectralField, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { domain: self.domain.clone(), mode_cap: self.mode_cap.clone(), coeffs })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        self.domain.check_same_box(&other.domain)?;
        if self.mode_cap != other.mode_cap {
            return Err(LabError::shape(format!(
                "mode caps differ: {:?} vs {:?}",
                self.mode_cap, other.mode_cap
            )));
        }
        Ok(())
    }

    /// Pads with zeros or truncates to a new mode cap.
    pub fn with_mode_cap(&self, mode_cap: &[usize]) -> Result<Self> {
        let mut out = Self::zeros(&self.domain, mode_cap)?;
        for i in 0..out.len() {
            out.coeffs[i] = self.coeff(&out.mode(i));
        }
        Ok(out)
    }

    /// Same coefficients attached to a different grid on the same box.
    pub fn on_domain(&self, domain: &BoxDomain) -> Result<Self> {
        self.domain.check_same_box(domain)?;
        Self::new(domain.clone(), self.mode_cap.clone(), self.coeffs.clone())
    }

    /// Keeps only modes with every `k_i <= level`.
    pub fn truncated(&self, level: usize) -> Self {
        self.map_coeffs(|i, c| {
            if mode_of(i, &self.mode_cap).iter().all(|k| *k <= level) {
                c
            } else {
                0.0
            }
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Pointwise synthesis on the field's own grid.
    pub fn to_nodal(&self) -> NodalField {
        synthesize(self, &self.domain)
    }

    /// Pointwise synthesis on another grid of the same box.
    pub fn synthesize_on(&self, domain: &BoxDomain) -> Result<NodalField> {
        self.domain.check_same_box(domain)?;
        Ok(synthesize(self, domain))
    }

    /// Value at an arbitrary point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let l = self.domain.lengths();
        (0..self.len())
            .map(|i| {
                let k = self.mode(i);
                self.coeffs[i]
                    * k.iter()
                        .zip(x)
                        .zip(l)
                        .map(|((k, x), l)| (*k as f64 * PI * x / l).sin())
                        .product::<f64>()
            })
            .sum()
    }

    /// L2, H1_0 and H^-1 from coefficients; L4 by quadrature on the field's grid.
    pub fn norm(&self, which: Norm) -> Result<f64> {
        let mass = self.domain.mode_mass();
        let sum = match which {
            Norm::L2 => self.coeffs.iter().map(|c| c * c).sum::<f64>(),
            Norm::H10 => self.coeffs.iter().zip(self.eigenvalues()).map(|(c, l)| l * c * c).sum(),
            Norm::HMinus1 => {
                self.coeffs.iter().zip(self.eigenvalues()).map(|(c, l)| c * c / l).sum()
            }
            Norm::L4 => return self.to_nodal().norm(Norm::L4),
        };
        Ok((mass * sum).sqrt())
    }

    /// L2 norm; infallible shorthand.
    pub fn l2(&self) -> f64 {
        (self.domain.mode_mass() * self.coeffs.iter().map(|c| c * c).sum::<f64>()).sqrt()
    }
}

/// `(f, g)` in L2 of the box. Mode caps may differ; missing modes count as zero.
pub fn inner_product(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    f.domain.check_same_box(&g.domain)?;
    if f.mode_cap.len() != g.mode_cap.len() {
        return Err(LabError::shape("fields of different dimension"));
    }
    let sum: f64 = if f.mode_cap == g.mode_cap {
        f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b).sum()
    } else {
        (0..f.len()).map(|i| f.coeffs[i] * g.coeff(&f.mode(i))).sum()
    };
    Ok(f.domain.mode_mass() * sum)
}

/// `sum_i (k_i pi / L_i)^2`, the `-Delta` eigenvalue of mode `k`.
pub fn laplacian_eigenvalue(k: &[usize], domain: &BoxDomain) -> Result<f64> {
    if k.len() != domain.dims() {
        return Err(LabError::shape(format!(
            "mode {k:?} has wrong dimension for a {}-d box",
            domain.dims()
        )));
    }
    if k.contains(&0) {
        return Err(LabError::input(format!("mode indices must be >= 1, got {k:?}")));
    }
    Ok(eigenvalue_unchecked(k, domain.lengths()))
}

pub(crate) fn eigenvalue_unchecked(k: &[usize], lengths: &[f64]) -> f64 {
    k.iter().zip(lengths).map(|(k, l)| (*k as f64 * PI / l).powi(2)).sum()
}

/// Discrete sine expansion of nodal data, truncated to `mode_cap`.
///
/// Uses the orthogonal type-I discrete sine transform, so for data that is
/// band-limited below the grid size it inverts [`from_spectral`] exactly.
pub fn to_spectral(f: &NodalField, mode_cap: &[usize]) -> Result<SpectralField> {
    let domain = f.domain();
    check_mode_cap(domain, mode_cap)?;
    let mut data = f.values.clone();
    let mut shape = domain.grid_points().to_vec();
    for axis in 0..domain.dims() {
        let n = domain.grid_points()[axis];
        let k = mode_cap[axis];
        let scale = 2.0 / (n + 1) as f64;
        let table = sine_table(k, n);
        // out[kk] = scale * sum_j sin((kk+1)(j+1) pi/(n+1)) f[j]
        let mat: Vec<f64> = table.iter().map(|v| v * scale).collect();
        data = apply_axis(&data, &shape, axis, &mat, k);
        shape[axis] = k;
    }
    SpectralField::new(domain.clone(), mode_cap.to_vec(), data)
}

/// Pointwise synthesis `sum_k c_k prod sin(k_i pi x_i / L_i)` on the field's grid.
pub fn from_spectral(c: &SpectralField) -> NodalField {
    c.to_nodal()
}

fn synthesize(c: &SpectralField, domain: &BoxDomain) -> NodalField {
    let mut data = c.coeffs.clone();
    let mut shape = c.mode_cap.clone();
    for axis in 0..domain.dims() {
        let n = domain.grid_points()[axis];
        let k = c.mode_cap[axis];
        let table = sine_table(k, n);
        // transpose: out[j] = sum_kk table[kk][j] c[kk]
        let mut mat = vec![0.0; n * k];
        for kk in 0..k {
            for j in 0..n {
                mat[j * k + kk] = table[kk * n + j];
            }
        }
        data = apply_axis(&data, &shape, axis, &mat, n);
        shape[axis] = n;
    }
    NodalField { domain: domain.clone(), values: data }
}

fn check_mode_cap(domain: &BoxDomain, mode_cap: &[usize]) -> Result<()> {
    if mode_cap.len() != domain.dims() {
        return Err(LabError::shape(format!(
            "mode cap {mode_cap:?} does not match a {}-d box",
            domain.dims()
        )));
    }
    if mode_cap.contains(&0) {
        return Err(LabError::input("mode cap must be >= 1 per axis"));
    }
    if let Some((cap, n)) = mode_cap.iter().zip(domain.grid_points()).find(|(c, n)| c > n) {
        return Err(LabError::input(format!(
            "mode cap {cap} exceeds {n} grid points on an axis"
        )));
    }
    Ok(())
}

/// Row-major table `sin((k+1)(j+1) pi / (n+1))`, `k < modes`, `j < n`.
///
/// The argument is reduced modulo `2(n+1)` in integers before scaling so the
/// entries stay accurate for large products.
fn sine_table(modes: usize, n: usize) -> Vec<f64> {
    let period = 2 * (n + 1);
    let mut out = Vec::with_capacity(modes * n);
    for k in 1..=modes {
        for j in 1..=n {
            let r = (k * j) % period;
            out.push((PI * r as f64 / (n + 1) as f64).sin());
        }
    }
    out
}

/// Applies `mat` (`out_len x shape[axis]`, row-major) along one axis.
fn apply_axis(data: &[f64], shape: &[usize], axis: usize, mat: &[f64], out_len: usize) -> Vec<f64> {
    let in_len = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * out_len * inner];
    let mut line = vec![0.0; in_len];
    for o in 0..outer {
        for i in 0..inner {
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[(o * in_len + j) * inner + i];
            }
            for r in 0..out_len {
                let row = &mat[r * in_len..(r + 1) * in_len];
                let s: f64 = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                out[(o * out_len + r) * inner + i] = s;
            }
        }
    }
    out
}

/// 0-based multi-index of flat position `flat` in a row-major array of `shape`.
pub(crate) fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for axis in (0..shape.len()).rev() {
        idx[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
    idx
}

fn mode_of(i: usize, mode_cap: &[usize]) -> Vec<usize> {
    unravel(i, mode_cap).into_iter().map(|k| k + 1).collect()
}
