//! Small numerical kit shared by the modules: least-squares lines, cubic and
//! monotone interpolation, smoothed derivatives of sampled histories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

/// Ordinary least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub samples: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples { needed: 2, found: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = ((0..n)
        .map(|i| (y[i] - slope * x[i] - intercept).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: rms,
        samples: n,
    })
}

/// Natural cubic spline through uniformly spaced samples.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, h: f64, y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::InsufficientSamples { needed: 3, found: n });
        }
        // Second derivatives at interior knots; natural ends m_0 = m_{n-1} = 0.
        let k = n - 2;
        let rhs: Vec<f64> = (1..n - 1)
            .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
            .collect();
        let sys = Tridiagonal::new(vec![1.0; k - 1], vec![4.0; k], vec![1.0; k - 1]);
        let inner = sys.solve(&rhs)?;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        Ok(Self {
            x0,
            h,
            y: y.to_vec(),
            m,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    /// Value at `x`; `None` outside the sampled interval.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.y.len();
        let s = (x - self.x0) / self.h;
        let tol = 1e-9;
        if s < -tol || s > (n - 1) as f64 + tol {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        let t = (s - i as f64).clamp(0.0, 1.0);
        let u = 1.0 - t;
        let h2 = self.h * self.h;
        Some(
            u * self.y[i]
                + t * self.y[i + 1]
                + h2 / 6.0 * ((u * u * u - u) * self.m[i] + (t * t * t - t) * self.m[i + 1]),
        )
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InsufficientSamples { needed: 2, found: n.min(y.len()) });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "x",
                value: f64::NAN,
                reason: "abscissae must be strictly increasing",
            });
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let h0 = x[i] - x[i - 1];
                    let h1 = x[i + 1] - x[i];
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
            d[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Value at `x`, clamped to the sampled interval.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = ((x - self.x[i]) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.d[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.d[i + 1]
    }

    /// Inverse of an increasing interpolant by bisection.
    pub fn invert(&self, target: f64) -> f64 {
        let (mut lo, mut hi) = self.domain();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Derivative of sampled data by a local least-squares quadratic over a
/// window of `window` points (odd). The window is shifted inward at the ends.
pub fn smoothed_derivative(x: &[f64], y: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let w = window.max(3) | 1;
    if n < w {
        return Err(Error::InsufficientSamples { needed: w, found: n });
    }
    let half = w / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - w);
        let xs = &x[start..start + w];
        let ys = &y[start..start + w];
        out.push(quadratic_slope_at(xs, ys, x[i]));
    }
    Ok(out)
}

fn quadratic_slope_at(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    // Fit y = c0 + c1 s + c2 s^2 with s = x - x0; the derivative at x0 is c1.
    let scale = xs.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (x, y) in xs.iter().zip(ys) {
        let s = (x - x0) / scale;
        let basis = [1.0, s, s * s];
        for r in 0..3 {
            b[r] += basis[r] * y;
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    solve3(a, b)[1] / scale
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for c in row + 1..3 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 2.0).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spline_is_fourth_order_on_smooth_data() {
        let err = |n: usize| {
            let h = 8.0 / (n - 1) as f64;
            let y: Vec<f64> = (0..n).map(|i| (-(-4.0 + i as f64 * h).powi(2)).exp()).collect();
            let s = UniformSpline::new(-4.0, h, &y).unwrap();
            (0..997)
                .map(|k| {
                    let x = -3.0 + 6.0 * k as f64 / 996.0;
                    (s.eval(x).unwrap() - (-x * x).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let e1 = err(201);
        let e2 = err(401);
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
        assert!(UniformSpline::new(0.0, 1.0, &[1.0, 2.0, 3.0]).unwrap().eval(5.0).is_none());
    }

    #[test]
    fn pchip_inverse_round_trip() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp() - 1.0).collect();
        let p = Pchip::new(&x, &y).unwrap();
        for k in 0..50 {
            let t = 0.05 + k as f64 * 0.05;
            let back = p.invert(p.eval(t));
            assert!((back - t).abs() < 1e-12);
        }
        for (xi, yi) in x.iter().zip(&y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothed_derivative_exact_on_quadratics() {
        let x: Vec<f64> = (0..20).map(|i| 0.3 * i as f64 + 0.01 * (i as f64).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v * v - v + 1.0).collect();
        let d = smoothed_derivative(&x, &y, 5).unwrap();
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - (4.0 * xi - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        assert!((s.value() - (1.0 + 1e-14)).abs() < 1e-18);
    }
}
