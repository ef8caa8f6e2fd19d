use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{LabError, Result};

/// Incompressibility tolerance relative to the coefficient size.
pub const DIV_TOL: f64 = 1e-12;

/// The torus `[0, 2 pi)^dims` with wavevectors `|k_i| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicBox {
    dims: usize,
    radius: usize,
}

impl PeriodicBox {
    pub fn new(dims: usize, radius: usize) -> Result<Self> {
        if !(2..=3).contains(&dims) {
            return Err(LabError::input(format!("periodic box needs 2 or 3 dimensions, got {dims}")));
        }
        if radius < 1 {
            return Err(LabError::input("mode radius K must be >= 1"));
        }
        Ok(Self { dims, radius })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Modes per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn num_modes(&self) -> usize {
        self.side().pow(self.dims as u32)
    }

    /// `(2 pi)^dims`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dims as i32)
    }

    /// Wavevector of flat mode index `i`.
    pub fn wavevector(&self, mut i: usize) -> Vec<i64> {
        let s = self.side();
        let mut k = vec![0i64; self.dims];
        for axis in (0..self.dims).rev() {
            k[axis] = (i % s) as i64 - self.radius as i64;
            i /= s;
        }
        k
    }

    /// Flat index of `k`, if retained.
    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let r = self.radius as i64;
        let mut idx = 0;
        for ki in k {
            if ki.abs() > r {
                return None;
            }
            idx = idx * self.side() + (ki + r) as usize;
        }
        Some(idx)
    }

    pub fn wavevectors(&self) -> Vec<Vec<i64>> {
        (0..self.num_modes()).map(|i| self.wavevector(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &PeriodicBox) -> Result<()> {
        if self != other {
            return Err(LabError::shape(format!(
                "periodic boxes differ: dims {} radius {} vs dims {} radius {}",
                self.dims, self.radius, other.dims, other.radius
            )));
        }
        Ok(())
    }
}

fn norm2(k: &[i64]) -> f64 {
    k.iter().map(|v| (v * v) as f64).sum()
}

/// Vector Fourier coefficients without structural guarantees; `coeffs[mode * dims + axis]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub(crate) pbox: PeriodicBox,
    pub(crate) coeffs: Vec<Complex64>,
}

impl VectorField {
    pub fn new(pbox: PeriodicBox, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != pbox.num_modes() * pbox.dims() {
            return Err(LabError::shape(format!(
                "{} coefficients for {} modes of dimension {}",
                coeffs.len(),
                pbox.num_modes(),
                pbox.dims()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LabError::input("vector field contains non-finite coefficients"));
        }
        Ok(Self { pbox, coeffs })
    }

    pub fn zeros(pbox: PeriodicBox) -> Self {
        Self { pbox, coeffs: vec![Complex64::new(0.0, 0.0); pbox.num_modes() * pbox.dims()] }
    }

    /// Samples a real field on a `(2K + 2)^dims` grid and keeps modes `|k_i| <= K`.
    /// Band-limited inputs are reproduced exactly.
    pub fn from_fn(pbox: PeriodicBox, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let m = pbox.side() + 1;
        let grid = Grid::new(pbox.dims(), m);
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; pbox.dims()];
        for p in 0..grid.len() {
            let v = f(&grid.point(p));
            if v.len() != pbox.dims() {
                return Err(LabError::shape("sampled vector has the wrong dimension"));
            }
            for (c, vi) in comps.iter_mut().zip(v) {
                c[p] = Complex64::new(vi, 0.0);
            }
        }
        let mut out = Self::zeros(pbox);
        for (axis, mut c) in comps.into_iter().enumerate() {
            grid.forward(&mut c);
            grid.gather(&c, pbox, |i, v| out.coeffs[i * pbox.dims() + axis] = v);
        }
        Self::new(pbox, out.coeffs)
    }

    pub fn pbox(&self) -> PeriodicBox {
        self.pbox
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mode(&self, i: usize) -> &[Complex64] {
        let d = self.pbox.dims();
        &self.coeffs[i * d..(i + 1) * d]
    }
}

/// Divergence-free, real, zero-mean vector field on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct DivFreeField {
    inner: VectorField,
}

impl DivFreeField {
    /// Checks incompressibility, reality and zero mean.
    pub fn new(field: VectorField) -> Result<Self> {
        let pbox = field.pbox;
        let d = pbox.dims();
        let zero = pbox.index(&vec![0; d]).unwrap();
        if field.mode(zero).iter().any(|c| c.norm() != 0.0) {
            return Err(LabError::input("divergence-free field must have no k = 0 mode"));
        }
        for i in 0..pbox.num_modes() {
            let k = pbox.wavevector(i);
            let u = field.mode(i);
            let size = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let div: Complex64 = k.iter().zip(u).map(|(k, c)| c * *k as f64).sum();
            if div.norm() > DIV_TOL * size * norm2(&k).sqrt().max(1.0) {
                return Err(LabError::input(format!("mode {k:?} violates k . u_k = 0 (|k . u_k| = {})", div.norm())));
            }
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let j = pbox.index(&neg).unwrap();
            let mirror = field.mode(j);
            if u.iter().zip(mirror).any(|(a, b)| (a - b.conj()).norm() > DIV_TOL * size.max(1e-300)) {
                return Err(LabError::input(format!("mode {k:?} violates u_-k = conj(u_k)")));
            }
        }
        Ok(Self { inner: field })
    }

    pub fn zeros(pbox: PeriodicBox) -> Self {
        Self { inner: VectorField::zeros(pbox) }
    }

    pub(crate) fn from_projected(inner: VectorField) -> Self {
        Self { inner }
    }

    pub fn pbox(&self) -> PeriodicBox {
        self.inner.pbox
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.inner.coeffs
    }

    pub fn as_vector(&self) -> &VectorField {
        &self.inner
    }

    pub fn mode(&self, i: usize) -> &[Complex64] {
        self.inner.mode(i)
    }

    /// Coefficient-wise map; the caller guarantees the structure is kept.
    pub(crate) fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.coeffs().iter().enumerate().map(|(i, c)| f(i, *c)).collect();
        Self::from_projected(VectorField { pbox: self.pbox(), coeffs })
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &DivFreeField, b: f64) -> Result<Self> {
        self.pbox().check_same(&other.pbox())?;
        let coeffs = self.coeffs().iter().zip(other.coeffs()).map(|(x, y)| x * a + y * b).collect();
        Ok(Self::from_projected(VectorField { pbox: self.pbox(), coeffs }))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_projected(VectorField { pbox: self.pbox(), coeffs: self.coeffs().iter().map(|c| c * a).collect() })
    }

    /// `|v|` in `L2` of the torus.
    pub fn l2(&self) -> f64 {
        (self.pbox().volume() * self.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `||grad v||` in `L2`.
    pub fn h1(&self) -> f64 {
        let d = self.pbox().dims();
        let sum: f64 = (0..self.pbox().num_modes())
            .map(|i| norm2(&self.pbox().wavevector(i)) * self.coeffs()[i * d..(i + 1) * d].iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum();
        (self.pbox().volume() * sum).sqrt()
    }

    /// `||v||_{L4}` by the rectangle rule on an `m^dims` grid; exact for `m > 4K`.
    pub fn l4_on(&self, m: usize) -> Result<f64> {
        if m <= 4 * self.pbox().radius() {
            return Err(LabError::input(format!("L4 quadrature needs more than 4K = {} points", 4 * self.pbox().radius())));
        }
        let comps = to_grid(self.as_vector(), m);
        let n = comps[0].len();
        let sum: f64 = (0..n)
            .map(|p| {
                let s: f64 = comps.iter().map(|c| c[p] * c[p]).sum();
                s * s
            })
            .sum();
        Ok((self.pbox().volume() * sum / n as f64).powf(0.25))
    }

    /// `||v||_{L4}` on the smallest exact grid.
    pub fn l4(&self) -> f64 {
        self.l4_on(4 * self.pbox().radius() + 1).expect("grid is large enough")
    }

    /// `||div u||_{L2} / ||grad u||_{L2}`; zero for the zero field.
    pub fn max_divergence(&self) -> f64 {
        let d = self.pbox().dims();
        let (mut div, mut grad) = (0.0, 0.0);
        for i in 0..self.pbox().num_modes() {
            let k = self.pbox().wavevector(i);
            let u = &self.coeffs()[i * d..(i + 1) * d];
            div += k.iter().zip(u).map(|(k, c)| c * *k as f64).sum::<Complex64>().norm_sqr();
            grad += norm2(&k) * u.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        if grad == 0.0 {
            0.0
        } else {
            (div / grad).sqrt()
        }
    }

    /// Seeded random field with `|u_k| ~ |k|^-decay` on the retained modes,
    /// scaled to unit `L2` norm.
    pub fn random(pbox: PeriodicBox, seed: u64, decay: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = pbox.dims();
        let mut raw = VectorField::zeros(pbox);
        for i in 0..pbox.num_modes() {
            let k = pbox.wavevector(i);
            if !is_positive_half(&k) {
                continue;
            }
            let amp = norm2(&k).powf(-0.5 * decay);
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let j = pbox.index(&neg).unwrap();
            for axis in 0..d {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
                raw.coeffs[i * d + axis] = c;
                raw.coeffs[j * d + axis] = c.conj();
            }
        }
        let v = leray_project(&raw);
        let n = v.l2();
        if n > 0.0 {
            v.scaled(1.0 / n)
        } else {
            v
        }
    }

    /// `amplitude * e^{i k.x} + c.c.` projected onto divergence-free fields.
    pub fn single_mode(pbox: PeriodicBox, k: &[i64], amplitude: &[Complex64]) -> Result<Self> {
        let d = pbox.dims();
        if k.len() != d || amplitude.len() != d || k.iter().all(|v| *v == 0) {
            return Err(LabError::input("single mode needs a nonzero wavevector and amplitude of the box dimension"));
        }
        let i = pbox.index(k).ok_or_else(|| LabError::input(format!("mode {k:?} outside radius {}", pbox.radius())))?;
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let j = pbox.index(&neg).unwrap();
        let mut raw = VectorField::zeros(pbox);
        for axis in 0..d {
            raw.coeffs[i * d + axis] = amplitude[axis];
            raw.coeffs[j * d + axis] = amplitude[axis].conj();
        }
        Ok(leray_project(&raw))
    }

    /// `(sin x cos y, -cos x sin y)`.
    pub fn taylor_green_2d(radius: usize) -> Result<Self> {
        let pbox = PeriodicBox::new(2, radius)?;
        Ok(leray_project(&VectorField::from_fn(pbox, |x| vec![x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin()])?))
    }

    /// `(sin x cos y cos z, -cos x sin y cos z, 0)`.
    pub fn taylor_green_3d(radius: usize) -> Result<Self> {
        let pbox = PeriodicBox::new(3, radius)?;
        Ok(leray_project(&VectorField::from_fn(pbox, |x| {
            vec![x[0].sin() * x[1].cos() * x[2].cos(), -x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
        })?))
    }
}

fn is_positive_half(k: &[i64]) -> bool {
    match k.iter().find(|v| **v != 0) {
        Some(v) => *v > 0,
        None => false,
    }
}

/// Leray projection `u_k -> (I - k k^T / |k|^2) u_k`, combined with the
/// projection onto real fields (`u_-k = conj(u_k)`) and removal of the mean.
///
/// Both maps are orthogonal projections that commute, so the result is
/// idempotent and self-adjoint.
pub fn leray_project(raw: &VectorField) -> DivFreeField {
    let pbox = raw.pbox;
    let d = pbox.dims();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); raw.coeffs.len()];
    for i in 0..pbox.num_modes() {
        let k = pbox.wavevector(i);
        let kk = norm2(&k);
        if kk == 0.0 {
            continue;
        }
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let j = pbox.index(&neg).unwrap();
        let sym: Vec<Complex64> = (0..d).map(|a| 0.5 * (raw.coeffs[i * d + a] + raw.coeffs[j * d + a].conj())).collect();
        let dot: Complex64 = k.iter().zip(&sym).map(|(k, c)| c * *k as f64).sum();
        for a in 0..d {
            coeffs[i * d + a] = sym[a] - dot * (k[a] as f64 / kk);
        }
    }
    DivFreeField::from_projected(VectorField { pbox, coeffs })
}

/// Uniform `m^dims` grid on the torus with n-dimensional FFTs.
pub(crate) struct Grid {
    dims: usize,
    m: usize,
}

impl Grid {
    pub(crate) fn new(dims: usize, m: usize) -> Self {
        Self { dims, m }
    }

    pub(crate) fn len(&self) -> usize {
        self.m.pow(self.dims as u32)
    }

    fn point(&self, mut p: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dims];
        for axis in (0..self.dims).rev() {
            x[axis] = 2.0 * PI * (p % self.m) as f64 / self.m as f64;
            p /= self.m;
        }
        x
    }

    /// Places retained coefficients at their aliased grid positions.
    pub(crate) fn scatter(&self, pbox: PeriodicBox, coeff: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        let mut data = vec![Complex64::new(0.0, 0.0); self.len()];
        for i in 0..pbox.num_modes() {
            let k = pbox.wavevector(i);
            data[self.position(&k)] += coeff(i);
        }
        data
    }

    pub(crate) fn gather(&self, data: &[Complex64], pbox: PeriodicBox, mut put: impl FnMut(usize, Complex64)) {
        for i in 0..pbox.num_modes() {
            put(i, data[self.position(&pbox.wavevector(i))]);
        }
    }

    fn position(&self, k: &[i64]) -> usize {
        let m = self.m as i64;
        k.iter().fold(0, |acc, ki| acc * self.m + ki.rem_euclid(m) as usize)
    }

    /// Synthesis `sum_k c_k e^{i k.x}` at the grid points.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Analysis `m^-dims sum_x u(x) e^{-i k.x}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let mut planner = FftPlanner::new();
        let fft = if inverse { planner.plan_fft_inverse(self.m) } else { planner.plan_fft_forward(self.m) };
        let mut line = vec![Complex64::new(0.0, 0.0); self.m];
        for axis in 0..self.dims {
            let stride = self.m.pow((self.dims - 1 - axis) as u32);
            let outer = self.len() / (self.m * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * self.m * stride + s;
                    for j in 0..self.m {
                        line[j] = data[base + j * stride];
                    }
                    fft.process(&mut line);
                    for j in 0..self.m {
                        data[base + j * stride] = line[j];
                    }
                }
            }
        }
    }
}

/// Real components of `v` on an `m^dims` grid.
pub(crate) fn to_grid(v: &VectorField, m: usize) -> Vec<Vec<f64>> {
    let d = v.pbox.dims();
    let grid = Grid::new(d, m);
    (0..d)
        .map(|axis| {
            let mut data = grid.scatter(v.pbox, |i| v.coeffs[i * d + axis]);
            grid.inverse(&mut data);
            data.into_iter().map(|c| c.re).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavevector_indexing_round_trips() {
        let b = PeriodicBox::new(3, 2).unwrap();
        for i in 0..b.num_modes() {
            assert_eq!(b.index(&b.wavevector(i)), Some(i));
        }
        assert_eq!(b.index(&[3, 0, 0]), None);
    }

    #[test]
    fn gradients_project_to_zero() {
        let b = PeriodicBox::new(2, 3).unwrap();
        let mut raw = VectorField::zeros(b);
        for i in 0..b.num_modes() {
            let k = b.wavevector(i);
            let s = Complex64::new(0.0, (k[0] + 2 * k[1]) as f64);
            for a in 0..2 {
                raw.coeffs[i * 2 + a] = s * k[a] as f64;
            }
        }
        let p = leray_project(&raw);
        assert!(p.coeffs().iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn projection_is_idempotent() {
        let b = PeriodicBox::new(3, 3).unwrap();
        let v = DivFreeField::random(b, 5, 1.0);
        let again = leray_project(v.as_vector());
        let diff = v.lincomb(1.0, &again, -1.0).unwrap();
        assert!(diff.l2() <= 1e-14 * v.l2());
        assert!(DivFreeField::new(v.as_vector().clone()).is_ok());
    }

    #[test]
    fn taylor_green_has_expected_norms() {
        let v = DivFreeField::taylor_green_2d(2).unwrap();
        // |v|^2 = int sin^2 x cos^2 y + cos^2 x sin^2 y = 2 pi^2
        assert!((v.l2().powi(2) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((v.h1().powi(2) - 4.0 * PI * PI).abs() < 1e-12);
        assert!(v.max_divergence() < 1e-15);
    }

    #[test]
    fn l4_is_resolution_independent_once_exact() {
        let v = DivFreeField::random(PeriodicBox::new(3, 2).unwrap(), 3, 1.0);
        let (a, b) = (v.l4_on(9).unwrap(), v.l4_on(18).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
        assert!(v.l4_on(8).is_err());
    }

    #[test]
    fn rejects_compressible_and_complex_fields() {
        let b = PeriodicBox::new(2, 1).unwrap();
        let mut raw = VectorField::zeros(b);
        let i = b.index(&[1, 0]).unwrap();
        let j = b.index(&[-1, 0]).unwrap();
        raw.coeffs[i * 2] = Complex64::new(1.0, 0.0);
        raw.coeffs[j * 2] = Complex64::new(1.0, 0.0);
        assert!(DivFreeField::new(raw.clone()).is_err());
        raw.coeffs[i * 2] = Complex64::new(0.0, 0.0);
        raw.coeffs[j * 2] = Complex64::new(0.0, 0.0);
        raw.coeffs[i * 2 + 1] = Complex64::new(1.0, 0.0);
        assert!(DivFreeField::new(raw).unwrap_err().to_string().contains("conj"));
    }
}
