//! Changes of variables: similarity variables `y = λx`, `τ = ∫λ²`, the gauge
//! `w = e^{-a y²/4} v`, and the fixed-`α` frame `λ₁`, `σ`, `z = (λ₁/λ) y`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_exponent, Error, Result};
use crate::grid::{scale_by_exp, weighted_sup_norm, Field, Grid, WeightSpec};
use crate::numerics::{CompensatedSum, Pchip, UniformSpline};

/// Sampled similarity frame. Samples are indexed by `τ`, which is strictly
/// increasing; physical time is stored both as an absolute value and as the
/// per-interval increments so that differences near blowup keep full
/// precision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupFrame {
    p: f64,
    tau: Vec<f64>,
    a: Vec<f64>,
    ln_lambda: Vec<f64>,
    t: Vec<f64>,
    dt: Vec<f64>,
    #[serde(skip)]
    t_sum: CompensatedSum,
}

impl BlowupFrame {
    /// Frame at `τ = t = 0` with `λ(0) = 1`.
    pub fn start(p: f64, a0: f64) -> Result<Self> {
        ensure_exponent(p)?;
        Ok(Self {
            p,
            tau: vec![0.0],
            a: vec![a0],
            ln_lambda: vec![0.0],
            t: vec![0.0],
            dt: Vec::new(),
            t_sum: CompensatedSum::default(),
        })
    }

    /// Advances by `dτ` with `a` held constant over the step, integrating
    /// `λ_t = a λ³` exactly: `λ ← λ e^{a dτ}` and
    /// `dt = λ^{-2}(1 - e^{-2a dτ})/(2a)`. `a_next` is recorded at the new node.
    pub fn push_step(&mut self, a: f64, dtau: f64, a_next: f64) {
        let ll = *self.ln_lambda.last().unwrap();
        let x = 2.0 * a * dtau;
        let factor = if x.abs() < 1e-8 { dtau * (1.0 - 0.5 * x) } else { -(-x).exp_m1() / (2.0 * a) };
        let dt = (-2.0 * ll).exp() * factor;
        self.t_sum.add(dt);
        self.dt.push(dt);
        self.t.push(self.t_sum.value());
        self.ln_lambda.push(ll + a * dtau);
        self.tau.push(self.tau.last().unwrap() + dtau);
        self.a.push(a_next);
    }

    /// Piecewise-constant `a` on the given steps.
    pub fn from_piecewise_a(p: f64, a: &[f64], dtau: &[f64]) -> Result<Self> {
        if a.len() != dtau.len() + 1 {
            return Err(Error::InsufficientSamples {
                needed: dtau.len() + 1,
                found: a.len(),
            });
        }
        let mut f = Self::start(p, a[0])?;
        for k in 0..dtau.len() {
            f.push_step(a[k], dtau[k], a[k + 1]);
        }
        Ok(f)
    }

    /// Closure `λ_t = a(τ(t)) λ³` with `a` linearly interpolated between
    /// samples, integrated by RK4 in `τ` on `(ln λ, t)`.
    pub fn from_a_samples(p: f64, tau: &[f64], a: &[f64], substeps: usize) -> Result<Self> {
        if tau.len() != a.len() || tau.len() < 2 {
            return Err(Error::InsufficientSamples { needed: 2, found: tau.len().min(a.len()) });
        }
        if tau[0] != 0.0 || tau.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau[0],
                reason: "samples must start at 0 and increase",
            });
        }
        let mut f = Self::start(p, a[0])?;
        let m = substeps.max(1);
        for k in 0..tau.len() - 1 {
            let h = (tau[k + 1] - tau[k]) / m as f64;
            let lerp = |s: f64| a[k] + (a[k + 1] - a[k]) * (s - tau[k]) / (tau[k + 1] - tau[k]);
            let rhs = |s: f64, ll: f64| (lerp(s), (-2.0 * ll).exp());
            let mut ll = *f.ln_lambda.last().unwrap();
            let mut dt_acc = 0.0;
            for j in 0..m {
                let s = tau[k] + j as f64 * h;
                let k1 = rhs(s, ll);
                let k2 = rhs(s + 0.5 * h, ll + 0.5 * h * k1.0);
                let k3 = rhs(s + 0.5 * h, ll + 0.5 * h * k2.0);
                let k4 = rhs(s + h, ll + h * k3.0);
                ll += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                dt_acc += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
            f.t_sum.add(dt_acc);
            f.dt.push(dt_acc);
            f.t.push(f.t_sum.value());
            f.ln_lambda.push(ll);
            f.tau.push(tau[k + 1]);
            f.a.push(a[k + 1]);
        }
        Ok(f)
    }

    /// Frame from sampled `λ(t)`: `τ` by cumulative trapezoid of `λ²` and
    /// `a = λ^{-3} λ_t` by centered differences (one-sided at the ends).
    pub fn from_lambda(p: f64, t: &[f64], lambda: &[f64]) -> Result<Self> {
        ensure_exponent(p)?;
        let n = t.len();
        if n < 3 || lambda.len() != n {
            return Err(Error::InsufficientSamples { needed: 3, found: n.min(lambda.len()) });
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || lambda.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: f64::NAN,
                reason: "need increasing times and positive scale",
            });
        }
        let mut tau = vec![0.0];
        for k in 0..n - 1 {
            let inc = 0.5 * (t[k + 1] - t[k]) * (lambda[k].powi(2) + lambda[k + 1].powi(2));
            tau.push(tau[k] + inc);
        }
        let a: Vec<f64> = (0..n)
            .map(|k| {
                let (i, j) = if k == 0 { (0, 1) } else if k == n - 1 { (n - 2, n - 1) } else { (k - 1, k + 1) };
                let dl = (lambda[j] - lambda[i]) / (t[j] - t[i]);
                dl / lambda[k].powi(3)
            })
            .collect();
        let mut sum = CompensatedSum::default();
        sum.add(t[0]);
        Ok(Self {
            p,
            tau,
            a,
            ln_lambda: lambda.iter().map(|l| l.ln()).collect(),
            t: t.to_vec(),
            dt: t.windows(2).map(|w| w[1] - w[0]).collect(),
            t_sum: sum,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn increments(&self) -> &[f64] {
        &self.dt
    }

    pub fn a_samples(&self) -> &[f64] {
        &self.a
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.ln_lambda.iter().map(|l| l.exp()).collect()
    }

    pub fn ln_lambdas(&self) -> &[f64] {
        &self.ln_lambda
    }

    /// `t_j - t_k` from the stored increments.
    pub fn elapsed(&self, from: usize, to: usize) -> f64 {
        let (lo, hi, sign) = if from <= to { (from, to, 1.0) } else { (to, from, -1.0) };
        let mut s = CompensatedSum::default();
        for dt in &self.dt[lo..hi] {
            s.add(*dt);
        }
        sign * s.value()
    }

    fn interp(&self, values: &[f64], tau: f64) -> Result<f64> {
        if self.tau.len() < 2 {
            return Ok(values[0]);
        }
        Ok(Pchip::new(&self.tau, values)?.eval(tau))
    }

    pub fn lambda_at_tau(&self, tau: f64) -> Result<f64> {
        Ok(self.interp(&self.ln_lambda, tau)?.exp())
    }

    pub fn a_at_tau(&self, tau: f64) -> Result<f64> {
        self.interp(&self.a, tau)
    }

    pub fn t_at_tau(&self, tau: f64) -> Result<f64> {
        self.interp(&self.t, tau)
    }

    /// Inverse of [`Self::t_at_tau`] by bisection on the same interpolant.
    pub fn tau_at_t(&self, t: f64) -> Result<f64> {
        if self.tau.len() < 2 {
            return Ok(self.tau[0]);
        }
        Ok(Pchip::new(&self.tau, &self.t)?.invert(t))
    }

    pub fn lambda_at_t(&self, t: f64) -> Result<f64> {
        self.lambda_at_tau(self.tau_at_t(t)?)
    }

    /// Checks `a = λ^{-3} λ_t` at interior samples (centered differences in
    /// `t`) and `d(λ^{-2}) = -2a dt` interval by interval (trapezoid in `a`),
    /// returning the largest relative deviations of each. The interval form
    /// avoids the cancellation in `λ(0)^{-2} - 2∫a` near blowup.
    pub fn consistency(&self) -> ConsistencyReport {
        let n = self.len();
        let lam = self.lambdas();
        let mut a_dev = 0.0f64;
        for k in 1..n.saturating_sub(1) {
            let dt = self.elapsed(k - 1, k + 1);
            let a = (lam[k + 1] - lam[k - 1]) / dt / lam[k].powi(3);
            let scale = self.a[k].abs().max(1e-12);
            a_dev = a_dev.max((a - self.a[k]).abs() / scale);
        }
        let mut lam_dev = 0.0f64;
        for k in 1..n {
            let d_ll = self.ln_lambda[k] - self.ln_lambda[k - 1];
            // λ_{k-1}^{-2} - λ_k^{-2}
            let drop = -(-2.0 * self.ln_lambda[k - 1]).exp() * (-2.0 * d_ll).exp_m1();
            let pred = (self.a[k - 1] + self.a[k]) * self.dt[k - 1];
            lam_dev = lam_dev.max((pred - drop).abs() / drop.abs().max(f64::MIN_POSITIVE));
        }
        ConsistencyReport {
            a_relative: a_dev,
            lambda_relative: lam_dev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub a_relative: f64,
    pub lambda_relative: f64,
}

/// Field resampled onto a new grid, with the fraction of target nodes that
/// fell inside the source grid's image. Nodes outside are set to zero.
#[derive(Debug, Clone)]
pub struct Resampled {
    pub field: Field,
    pub coverage: f64,
}

impl Resampled {
    pub fn truncated(&self) -> bool {
        self.coverage < 1.0
    }
}

/// `g(y) = amp · f(y / stretch) · e^{phase(y)}` sampled on `target` by cubic
/// spline interpolation of `f`.
fn resample(f: &Field, stretch: f64, amp: f64, target: &Grid, phase: impl Fn(f64) -> f64) -> Result<Resampled> {
    let src = f.grid();
    let spline = UniformSpline::new(-src.half_width(), src.spacing(), f.values())?;
    let mut inside = 0usize;
    let values: Vec<f64> = target
        .nodes()
        .into_iter()
        .map(|y| {
            let x = y / stretch;
            // Snap to the edge to absorb rounding in y/λ at the boundary.
            let x = if (x.abs() - src.half_width()).abs() < 1e-12 * src.half_width() {
                x.signum() * src.half_width()
            } else {
                x
            };
            match spline.eval(x) {
                Some(v) => {
                    inside += 1;
                    scale_by_exp(amp * v, phase(y))
                }
                None => 0.0,
            }
        })
        .collect();
    let field = Field::new(*target, values, f.parity())?;
    if !field.is_finite() {
        return Err(Error::NonFinite("resampled field"));
    }
    Ok(Resampled {
        field,
        coverage: inside as f64 / target.len() as f64,
    })
}

/// `v(y) = λ^{-2/(p-1)} u(y/λ)` with `λ = λ(t)`.
pub fn to_similarity(u: &Field, frame: &BlowupFrame, t: f64, y_grid: &Grid) -> Result<Resampled> {
    let lambda = frame.lambda_at_t(t)?;
    to_similarity_with(u, lambda, frame.p(), y_grid)
}

/// Same as [`to_similarity`] for a given scale.
pub fn to_similarity_with(u: &Field, lambda: f64, p: f64, y_grid: &Grid) -> Result<Resampled> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "scale must be positive",
        });
    }
    resample(u, lambda, lambda.powf(-2.0 / (p - 1.0)), y_grid, |_| 0.0)
}

/// `u(x) = λ^{2/(p-1)} v(λ x)`.
pub fn from_similarity(v: &Field, frame: &BlowupFrame, t: f64, x_grid: &Grid) -> Result<Resampled> {
    let lambda = frame.lambda_at_t(t)?;
    to_similarity_with(v, 1.0 / lambda, frame.p(), x_grid)
}

/// `w = e^{-a y²/4} v`.
pub fn gauge(v: &Field, a: f64) -> Field {
    v.map(|y, x| scale_by_exp(x, -0.25 * a * y * y)).with_parity(v.parity())
}

/// `v = e^{a y²/4} w`; fails at the first node where the product overflows.
pub fn ungauge(w: &Field, a: f64) -> Result<Field> {
    let grid = w.grid();
    let mut out = Vec::with_capacity(grid.len());
    for (i, &x) in w.values().iter().enumerate() {
        let y = grid.node(i);
        let v = scale_by_exp(x, 0.25 * a * y * y);
        if !v.is_finite() {
            return Err(Error::WeightOverflow { node: i, y });
        }
        out.push(v);
    }
    Field::new(*grid, out, w.parity())
}

/// Frame with constant `α = a(T)` whose scale `λ₁` is tangent to `λ` at the
/// matching time `t(T)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledFrame {
    pub alpha: f64,
    pub tau_match: f64,
    pub lambda_match: f64,
    /// Frame samples with `τ ≤ T`.
    pub tau: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl RescaledFrame {
    /// `σ(t(T))`.
    pub fn sigma_match(&self) -> f64 {
        *self.sigma.last().unwrap()
    }

    pub fn lambda1_at_tau(&self, tau: f64) -> Result<f64> {
        if self.tau.len() < 2 {
            return Ok(self.lambda1[0]);
        }
        let ln: Vec<f64> = self.lambda1.iter().map(|l| l.ln()).collect();
        Ok(Pchip::new(&self.tau, &ln)?.eval(tau).exp())
    }

    /// `max |λ/λ₁ - 1|` over the stored samples.
    pub fn max_ratio_defect(&self, frame: &BlowupFrame) -> f64 {
        let lam = frame.lambdas();
        self.lambda1
            .iter()
            .zip(&lam)
            .map(|(l1, l)| (l / l1 - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `λ₁(t) = (λ(t_T)^{-2} - 2α(t - t_T))^{-1/2}` and
/// `σ(t) = ∫₀ᵗ λ₁² = ln(D(0)/D(t))/(2α)` with `D = λ₁^{-2}`.
pub fn build_lambda1(frame: &BlowupFrame, tau_match: f64) -> Result<RescaledFrame> {
    let taus = frame.taus();
    let k_match = taus.partition_point(|&s| s <= tau_match * (1.0 + 1e-14) + 1e-300);
    if k_match == 0 || tau_match > *taus.last().unwrap() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: tau_match,
            reason: "matching time outside the frame",
        });
    }
    let km = k_match - 1;
    let alpha = frame.a_samples()[km];
    let lam_t = frame.ln_lambdas()[km].exp();
    let d_match = lam_t.powi(-2);
    let mut lambda1 = Vec::with_capacity(km + 1);
    let mut d_vals = Vec::with_capacity(km + 1);
    for k in 0..=km {
        let d = d_match + 2.0 * alpha * frame.elapsed(k, km);
        if !(d > 0.0) {
            return Err(Error::LambdaUndefined { t: frame.times()[k] });
        }
        d_vals.push(d);
        lambda1.push(d.powf(-0.5));
    }
    let d0 = d_vals[0];
    let sigma: Vec<f64> = (0..=km)
        .map(|k| {
            if alpha.abs() < 1e-14 {
                frame.elapsed(0, k) / d0
            } else {
                (d0 / d_vals[k]).ln() / (2.0 * alpha)
            }
        })
        .collect();
    Ok(RescaledFrame {
        alpha,
        tau_match: taus[km],
        lambda_match: lam_t,
        tau: taus[..=km].to_vec(),
        lambda1,
        sigma,
    })
}

/// `η(z) = r^{2/(p-1)} e^{a y²/4 - α z²/4} ξ(y)` with `y = r z`, `r = λ/λ₁`.
pub fn xi_to_eta(
    xi: &Field,
    frame: &BlowupFrame,
    rframe: &RescaledFrame,
    tau: f64,
    z_grid: &Grid,
) -> Result<Resampled> {
    let lambda = frame.lambda_at_tau(tau)?;
    let a = frame.a_at_tau(tau)?;
    let lambda1 = rframe.lambda1_at_tau(tau)?;
    xi_to_eta_with(xi, lambda / lambda1, a, rframe.alpha, frame.p(), z_grid)
}

/// [`xi_to_eta`] for explicit ratio `r = λ/λ₁` and exponents `a`, `α`.
pub fn xi_to_eta_with(xi: &Field, r: f64, a: f64, alpha: f64, p: f64, z_grid: &Grid) -> Result<Resampled> {
    let amp = r.powf(2.0 / (p - 1.0));
    // z = y / r, so y = r z and the target is sampled at z.
    resample(xi, 1.0 / r, amp, z_grid, |z| 0.25 * (a * r * r - alpha) * z * z)
}

/// `(‖⟨y⟩^{-3} e^{a y²/4} ξ‖, ‖⟨z⟩^{-3} e^{α z²/4} η‖)`.
pub fn comparability_norms(xi: &Field, a: f64, eta: &Field, alpha: f64) -> Result<(f64, f64)> {
    Ok((
        weighted_sup_norm(xi, &WeightSpec::new(3, a)?)?,
        weighted_sup_norm(eta, &WeightSpec::new(3, alpha)?)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Parity;

    fn bump(grid: Grid) -> Field {
        Field::from_fn(grid, Parity::Even, |x| (-x * x / 2.0).exp() * (1.0 + 0.3 * x * x))
    }

    #[test]
    fn unit_scale_is_identity() {
        let g = Grid::new(10.0, 401).unwrap();
        let u = bump(g);
        let r = to_similarity_with(&u, 1.0, 3.0, &g).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.field.sub(&u).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn round_trip_through_similarity_variables() {
        let gx = Grid::new(10.0, 4001).unwrap();
        let gy = Grid::new(13.0, 4001).unwrap();
        let u = bump(gx);
        let lam = 1.3;
        let v = to_similarity_with(&u, lam, 3.0, &gy).unwrap();
        let back = to_similarity_with(&v.field, 1.0 / lam, 3.0, &gx).unwrap();
        assert!(back.field.sub(&u).unwrap().sup_norm() < 1e-8);
        let wide = to_similarity_with(&u, 1.0, 3.0, &Grid::new(20.0, 401).unwrap()).unwrap();
        assert!(wide.truncated());
    }

    #[test]
    fn homogeneous_solution_is_static_in_similarity_variables() {
        let p = 3.0;
        let a = 0.5;
        let t_star = 0.5;
        let t: Vec<f64> = (0..200).map(|k| 0.4 * k as f64 / 199.0).collect();
        let lam: Vec<f64> = t.iter().map(|s| (2.0 * a * (t_star - s)).powf(-0.5)).collect();
        let frame = BlowupFrame::from_lambda(p, &t, &lam).unwrap();
        let g = Grid::new(10.0, 201).unwrap();
        let s = 0.35;
        let u = Field::from_fn(g, Parity::Even, |_| ((p - 1.0) * (t_star - s)).powf(-1.0 / (p - 1.0)));
        let v = to_similarity(&u, &frame, s, &Grid::new(5.0, 101).unwrap()).unwrap();
        let va = (2.0 * a / (p - 1.0)).powf(1.0 / (p - 1.0));
        assert!(v.field.values().iter().all(|x| (x - va).abs() < 1e-5));
    }

    #[test]
    fn gauge_round_trip_and_zero_exponent() {
        let g = Grid::new(20.0, 401).unwrap();
        let v = bump(g);
        assert_eq!(gauge(&v, 0.0), v);
        let back = ungauge(&gauge(&v, 0.5), 0.5).unwrap();
        for i in 0..g.len() {
            if g.node(i).abs() <= 10.0 {
                assert!((back.values()[i] - v.values()[i]).abs() < 1e-12);
            }
        }
        let ones = Field::from_fn(Grid::new(60.0, 11).unwrap(), Parity::Even, |_| 1.0);
        assert!(matches!(ungauge(&ones, 1.0), Err(Error::WeightOverflow { node: 0, .. })));
    }

    #[test]
    fn piecewise_frame_matches_closed_form() {
        let p = 3.0;
        let a = 0.5;
        let steps = 400;
        let f = BlowupFrame::from_piecewise_a(p, &vec![a; steps + 1], &vec![0.01; steps]).unwrap();
        // λ = e^{aτ} and t = (1 - e^{-2aτ})/(2a).
        let tau = 4.0;
        assert!((f.lambdas()[steps] - (a * tau).exp()).abs() < 1e-12);
        assert!((f.times()[steps] - (1.0 - (-2.0 * a * tau).exp()) / (2.0 * a)).abs() < 1e-14);
        let c = f.consistency();
        assert!(c.a_relative < 1e-4, "{c:?}");
        assert!(c.lambda_relative < 1e-6, "{c:?}");
    }

    #[test]
    fn rk4_frame_matches_closed_form_for_linear_a() {
        let p = 3.0;
        let tau: Vec<f64> = (0..=100).map(|k| 0.05 * k as f64).collect();
        let a: Vec<f64> = tau.iter().map(|s| 0.5 - 0.02 * s).collect();
        let f = BlowupFrame::from_a_samples(p, &tau, &a, 4).unwrap();
        let ln_exact = 0.5 * 5.0 - 0.01 * 25.0;
        assert!((f.ln_lambdas()[100] - ln_exact).abs() < 1e-12);
    }

    #[test]
    fn time_maps_are_mutual_inverses() {
        let f = BlowupFrame::from_piecewise_a(3.0, &vec![0.45; 301], &vec![0.02; 300]).unwrap();
        for &t in &[0.0, 0.1, 0.5, 0.9] {
            let back = f.t_at_tau(f.tau_at_t(t).unwrap()).unwrap();
            assert!((back - t).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda1_for_parabolic_and_static_frames() {
        let f = BlowupFrame::from_piecewise_a(3.0, &vec![0.5; 201], &vec![0.01; 200]).unwrap();
        let r = build_lambda1(&f, 1.5).unwrap();
        assert_eq!(r.alpha, 0.5);
        assert!(r.max_ratio_defect(&f) < 1e-10);
        let still = BlowupFrame::from_piecewise_a(3.0, &vec![0.0; 11], &vec![0.1; 10]).unwrap();
        let r0 = build_lambda1(&still, 1.0).unwrap();
        assert_eq!(r0.alpha, 0.0);
        assert!(r0.lambda1.iter().all(|l| (l - 1.0).abs() < 1e-15));
        assert!((r0.sigma_match() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_equals_xi_in_identity_frame() {
        let g = Grid::new(10.0, 401).unwrap();
        let xi = bump(g);
        let eta = xi_to_eta_with(&xi, 1.0, 0.5, 0.5, 3.0, &g).unwrap();
        assert!(eta.field.sub(&xi).unwrap().sup_norm() < 1e-14);
        let (n1, n2) = comparability_norms(&xi, 0.5, &eta.field, 0.5).unwrap();
        assert!((n1 - n2).abs() < 1e-14);
    }
}
