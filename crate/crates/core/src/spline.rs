//! C² cubic interpolating splines with not-a-knot end conditions.

use crate::error::{Error, Result};

/// Piecewise cubic interpolant of `D`-dimensional samples.
#[derive(Clone, Debug)]
pub struct CubicSpline<const D: usize> {
    knots: Vec<f64>,
    values: Vec<[f64; D]>,
    slopes: Vec<[f64; D]>,
}

/// Value and first two derivatives at a parameter.
pub type SplineJet<const D: usize> = ([f64; D], [f64; D], [f64; D]);

impl<const D: usize> CubicSpline<D> {
    /// Builds the interpolant. Knots must be strictly increasing and there
    /// must be at least four of them.
    pub fn new(knots: Vec<f64>, values: Vec<[f64; D]>) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(Error::InvalidInput("knot and value counts differ".into()));
        }
        if n < 4 {
            return Err(Error::InvalidInput(format!(
                "not-a-knot spline needs at least 4 samples, got {n}"
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) || values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline samples must be finite".into()));
        }
        let slopes = not_a_knot_slopes(&knots, &values);
        Ok(CubicSpline { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[[f64; D]] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Evaluates value, first and second derivative. Outside the knot range
    /// the end cubics are extended.
    pub fn eval(&self, x: f64) -> SplineJet<D> {
        let n = self.knots.len();
        let i = self.knots.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let h = self.knots[i + 1] - self.knots[i];
        let t = x - self.knots[i];
        let mut p = [0.0; D];
        let mut d1 = [0.0; D];
        let mut d2 = [0.0; D];
        for c in 0..D {
            let y0 = self.values[i][c];
            let s0 = self.slopes[i][c];
            let s1 = self.slopes[i + 1][c];
            let delta = (self.values[i + 1][c] - y0) / h;
            let c2 = (3.0 * delta - 2.0 * s0 - s1) / h;
            let c3 = (s0 + s1 - 2.0 * delta) / (h * h);
            p[c] = y0 + t * (s0 + t * (c2 + t * c3));
            d1[c] = s0 + t * (2.0 * c2 + 3.0 * t * c3);
            d2[c] = 2.0 * c2 + 6.0 * t * c3;
        }
        (p, d1, d2)
    }
}

/// Knot slopes of the not-a-knot interpolant (tridiagonal system, solved by
/// the Thomas algorithm).
fn not_a_knot_slopes<const D: usize>(x: &[f64], y: &[[f64; D]]) -> Vec<[f64; D]> {
    let n = x.len();
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<[f64; D]> = (0..n - 1)
        .map(|i| std::array::from_fn(|c| (y[i + 1][c] - y[i][c]) / dx[i]))
        .collect();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![[0.0; D]; n];

    let d = x[2] - x[0];
    diag[0] = dx[1];
    sup[0] = d;
    rhs[0] = std::array::from_fn(|c| {
        ((dx[0] + 2.0 * d) * dx[1] * slope[0][c] + dx[0] * dx[0] * slope[1][c]) / d
    });
    for i in 1..n - 1 {
        sub[i] = dx[i];
        diag[i] = 2.0 * (dx[i - 1] + dx[i]);
        sup[i] = dx[i - 1];
        rhs[i] = std::array::from_fn(|c| 3.0 * (dx[i] * slope[i - 1][c] + dx[i - 1] * slope[i][c]));
    }
    let d = x[n - 1] - x[n - 3];
    sub[n - 1] = d;
    diag[n - 1] = dx[n - 3];
    rhs[n - 1] = std::array::from_fn(|c| {
        (dx[n - 2] * dx[n - 2] * slope[n - 3][c] + (2.0 * d + dx[n - 2]) * dx[n - 3] * slope[n - 2][c])
            / d
    });

    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        let prev = rhs[i - 1];
        for (r, p) in rhs[i].iter_mut().zip(prev) {
            *r -= w * p;
        }
    }
    let mut s = vec![[0.0; D]; n];
    s[n - 1] = rhs[n - 1].map(|r| r / diag[n - 1]);
    for i in (0..n - 1).rev() {
        s[i] = std::array::from_fn(|c| (rhs[i][c] - sup[i] * s[i + 1][c]) / diag[i]);
    }
    s
}
