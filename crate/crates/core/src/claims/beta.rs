use crate::error::{LabError, Result};

/// Minimum number of samples used to certify a profile.
pub const MIN_SAMPLES: usize = 1000;

/// A C1 weight on `[0, T]` stored as a cubic Hermite spline.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaProfile {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl BetaProfile {
    /// Cubic Hermite spline with prescribed knot values and slopes.
    pub fn hermite(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || values.len() != knots.len() || slopes.len() != knots.len() {
            return Err(LabError::input(
                "beta spline needs >= 2 knots and one value and slope per knot",
            ));
        }
        if knots[0] != 0.0 {
            return Err(LabError::input("beta spline must start at t = 0"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::input("beta knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).chain(&slopes).any(|v| !v.is_finite()) {
            return Err(LabError::input("beta spline data must be finite"));
        }
        Ok(Self { knots, values, slopes })
    }

    /// Shape-preserving (Fritsch-Carlson) cubic through control points.
    ///
    /// The interpolant does not overshoot the data, so a profile whose last
    /// control value is the largest attains its maximum at `T`.
    pub fn through_points(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(LabError::input("beta spline needs >= 2 control points"));
        }
        let n = knots.len();
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = d[0];
            m[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3].max(0.0), d[n - 2], d[n - 3]);
        }
        Self::hermite(knots, values, m)
    }

    pub fn constant(horizon: f64, value: f64) -> Result<Self> {
        Self::hermite(vec![0.0, horizon], vec![value, value], vec![0.0, 0.0])
    }

    pub fn horizon(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, t: f64) -> usize {
        let t = t.clamp(0.0, self.horizon());
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => (i - 1).min(self.knots.len() - 2),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let s = (t.clamp(0.0, self.horizon()) - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let s = (t.clamp(0.0, self.horizon()) - t0) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.values[i] + d10 * self.slopes[i] + d01 * self.values[i + 1] + d11 * self.slopes[i + 1]
    }

    /// Sample times: `samples` uniform points on `[0, T]` plus every knot.
    pub fn sample_times(&self, samples: usize) -> Vec<f64> {
        let n = samples.max(MIN_SAMPLES);
        let t_end = self.horizon();
        let mut ts: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        ts.extend_from_slice(&self.knots);
        ts
    }

    /// Checks `beta > 0` and `max beta = beta(T)` on at least 1000 samples.
    pub fn validate(&self) -> Result<()> {
        let peak = self.value(self.horizon());
        let tol = 1e-12 * peak.abs().max(1.0);
        for t in self.sample_times(MIN_SAMPLES) {
            let b = self.value(t);
            if !(b > 0.0) {
                return Err(LabError::precondition(format!("beta > 0 violated: beta({t}) = {b}")));
            }
            if b > peak + tol {
                return Err(LabError::precondition(format!(
                    "max beta attained at T violated: beta({t}) = {b} > beta(T) = {peak}"
                )));
            }
        }
        Ok(())
    }

    /// `max |beta'|` over the certification samples.
    pub fn max_abs_derivative(&self) -> f64 {
        self.sample_times(MIN_SAMPLES).into_iter().map(|t| self.derivative(t).abs()).fold(0.0, f64::max)
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_knot_data() {
        let b = BetaProfile::hermite(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 2.0], vec![0.0, -1.0, 3.0]).unwrap();
        for (i, t) in [0.0, 1.0, 2.0].iter().enumerate() {
            assert!((b.value(*t) - b.values()[i]).abs() < 1e-15);
            assert!((b.derivative(*t) - b.slopes()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let b = BetaProfile::through_points(vec![0.0, 0.3, 0.5, 0.8, 1.0], vec![1.0, 0.4, 0.9, 0.7, 1.5]).unwrap();
        let h = 1e-6;
        for i in 0..100 {
            let t = (i as f64 + 0.5) / 100.0;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.derivative(t)).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn monotone_interpolant_keeps_maximum_at_the_end() {
        let b = BetaProfile::through_points(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.9, 0.2, 0.8, 0.3, 1.0]).unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn validation_names_the_failed_property() {
        let b = BetaProfile::through_points(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 1.5]).unwrap();
        let err = b.validate().unwrap_err().to_string();
        assert!(err.contains("max beta attained at T"), "{err}");
        let b = BetaProfile::through_points(vec![0.0, 0.5, 1.0], vec![-1.0, 0.0, 1.0]).unwrap();
        assert!(b.validate().unwrap_err().to_string().contains("beta > 0"));
    }

    #[test]
    fn linear_segments_when_slopes_match_chords() {
        let b = BetaProfile::hermite(vec![0.0, 1.0], vec![2.0, 1.0], vec![-1.0, -1.0]).unwrap();
        for i in 0..=10 {
            assert!((b.derivative(i as f64 / 10.0) + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(BetaProfile::hermite(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(BetaProfile::hermite(vec![0.1, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(BetaProfile::hermite(vec![0.0], vec![1.0], vec![0.0]).is_err());
    }
}
