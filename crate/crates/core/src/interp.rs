//! One-dimensional interpolants on ascending grids.

use crate::error::{DmsError, Result};

fn check_grid(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(DmsError::InvalidParameter {
            name: "grid",
            reason: format!("need >= 2 nodes with matching values, got {} / {}", x.len(), y.len()),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DmsError::NonFinite("interpolation grid"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DmsError::InvalidParameter {
            name: "grid",
            reason: "nodes must be strictly ascending".into(),
        });
    }
    Ok(())
}

/// Index `i` with `x[i] <= v <= x[i+1]`, or an out-of-range error.
fn segment(x: &[f64], v: f64) -> Result<usize> {
    let (lo, hi) = (x[0], x[x.len() - 1]);
    if !(v >= lo && v <= hi) {
        return Err(DmsError::OutOfRange { v, lo, hi });
    }
    let i = x.partition_point(|&xi| xi <= v);
    Ok(i.saturating_sub(1).min(x.len() - 2))
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, v: f64) -> f64 {
    let h = x1 - x0;
    let t = (v - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_grid(&x, &y)?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { x, y, d })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        let i = segment(&self.x, v)?;
        if v == self.x[i] {
            return Ok(self.y[i]);
        }
        if v == self.x[i + 1] {
            return Ok(self.y[i + 1]);
        }
        Ok(hermite(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.d[i], self.d[i + 1], v))
    }
}

// Three-point end slope, limited to keep the end segment monotone.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 <= 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Natural cubic spline.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_grid(&x, &y)?;
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal solve for interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = x[j + 1] - x[j];
                let f = lower / diag[j - 1];
                diag[j] -= f * upper[j - 1];
                rhs[j] -= f * rhs[j - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
            }
        }
        Ok(NaturalSpline { x, y, m })
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        let i = segment(&self.x, v)?;
        if v == self.x[i] {
            return Ok(self.y[i]);
        }
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - v) / h;
        let b = (v - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}
