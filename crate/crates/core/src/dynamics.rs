//! Reference law `β(τ)`, the truncated `(b, c)` system, its linearization at
//! the static point, the leading-order blowup laws and fits of simulation
//! output against them.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_exponent, ensure_positive, Error, Result};
use crate::grid::{Field, Grid};
use crate::numerics::{fit_line, UniformSpline};

/// `β(τ) = 1/(1/b(0) + 4pτ/(p-1)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaLaw {
    pub b0: f64,
    pub p: f64,
}

impl BetaLaw {
    pub fn new(b0: f64, p: f64) -> Result<Self> {
        ensure_positive("b0", b0)?;
        ensure_exponent(p)?;
        Ok(Self { b0, p })
    }

    /// `4p/(p-1)²`, the slope of `1/β`.
    pub fn slope(&self) -> f64 {
        4.0 * self.p / (self.p - 1.0).powi(2)
    }

    pub fn beta(&self, tau: f64) -> f64 {
        1.0 / (1.0 / self.b0 + self.slope() * tau)
    }

    /// `κ = min(1/2, (p-1)/2)`.
    pub fn kappa(&self) -> f64 {
        0.5f64.min(0.5 * (self.p - 1.0))
    }
}

/// Gauge `a = l c + k`. The standard choice is `k = (1 - l)/2`, which puts
/// the static point at `a = c = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub l: f64,
    pub k: f64,
}

impl Gauge {
    pub fn standard(l: f64) -> Self {
        Self { l, k: 0.5 * (1.0 - l) }
    }

    pub fn a(&self, c: f64) -> f64 {
        self.l * c + self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedState {
    pub tau: f64,
    pub b: f64,
    pub c: f64,
}

/// Optional remainders `(ℛ_b, ℛ_c)(τ, b, c)` added to the truncated system.
pub type Remainders<'a> = &'a dyn Fn(f64, f64, f64) -> (f64, f64);

/// `b_τ = -2(3p-1)b²/(p-1)² + 2(c-a)b`, `c_τ = 2c(c-a) - 2bc/(p-1)`, with
/// the remainders entering as `b_τ += ℛ_b` and `c_τ += c ℛ_c`.
pub fn truncated_rhs(tau: f64, b: f64, c: f64, gauge: Gauge, p: f64, rem: Option<Remainders>) -> (f64, f64) {
    let a = gauge.a(c);
    let q = 2.0 * (3.0 * p - 1.0) / (p - 1.0).powi(2);
    let mut db = -q * b * b + 2.0 * (c - a) * b;
    let mut dc = 2.0 * c * (c - a) - 2.0 * b * c / (p - 1.0);
    if let Some(r) = rem {
        let (rb, rc) = r(tau, b, c);
        db += rb;
        dc += c * rc;
    }
    (db, dc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    /// First time `b` went negative, if it did; integration stops there.
    pub left_region: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> TruncatedState {
        let n = self.tau.len() - 1;
        TruncatedState {
            tau: self.tau[n],
            b: self.b[n],
            c: self.c[n],
        }
    }
}

fn rk4(s: TruncatedState, h: f64, gauge: Gauge, p: f64, rem: Option<Remainders>) -> TruncatedState {
    let f = |t: f64, b: f64, c: f64| truncated_rhs(t, b, c, gauge, p, rem);
    let k1 = f(s.tau, s.b, s.c);
    let k2 = f(s.tau + 0.5 * h, s.b + 0.5 * h * k1.0, s.c + 0.5 * h * k1.1);
    let k3 = f(s.tau + 0.5 * h, s.b + 0.5 * h * k2.0, s.c + 0.5 * h * k2.1);
    let k4 = f(s.tau + h, s.b + h * k3.0, s.c + h * k3.1);
    TruncatedState {
        tau: s.tau + h,
        b: s.b + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        c: s.c + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

/// Adaptive RK4 (step doubling, local error `tol`) from `initial` to `tau_end`.
pub fn integrate_truncated(
    initial: TruncatedState,
    gauge: Gauge,
    p: f64,
    tau_end: f64,
    tol: f64,
    rem: Option<Remainders>,
) -> Result<Trajectory> {
    ensure_exponent(p)?;
    ensure_positive("tol", tol)?;
    if initial.b < 0.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            value: initial.b,
            reason: "truncated system starts from b >= 0",
        });
    }
    let mut s = initial;
    let mut traj = Trajectory {
        tau: vec![s.tau],
        b: vec![s.b],
        c: vec![s.c],
        a: vec![gauge.a(s.c)],
        left_region: None,
    };
    let mut h = ((tau_end - s.tau) / 100.0).min(0.1);
    while s.tau < tau_end {
        h = h.min(tau_end - s.tau);
        let full = rk4(s, h, gauge, p, rem);
        let half = rk4(rk4(s, 0.5 * h, gauge, p, rem), 0.5 * h, gauge, p, rem);
        let err = ((full.b - half.b).abs().max((full.c - half.c).abs())) / 15.0;
        if err <= tol || h < 1e-12 {
            // Richardson-corrected value from the two half steps.
            s = TruncatedState {
                tau: if tau_end - half.tau < 1e-13 * tau_end.abs().max(1.0) { tau_end } else { half.tau },
                b: half.b + (half.b - full.b) / 15.0,
                c: half.c + (half.c - full.c) / 15.0,
            };
            traj.tau.push(s.tau);
            traj.b.push(s.b);
            traj.c.push(s.c);
            traj.a.push(gauge.a(s.c));
            if s.b < 0.0 {
                traj.left_region = Some(s.tau);
                break;
            }
        }
        let factor = if err == 0.0 { 2.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 2.0) };
        h *= factor;
    }
    Ok(traj)
}

/// Analytic Jacobian of the truncated system at `(b, c) = (0, 1/2)` under
/// the standard gauge: `[[0, 0], [-1/(p-1), 1-l]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [f64; 2],
}

pub fn jacobian_at_equilibrium(l: f64, p: f64) -> Result<Linearization> {
    ensure_exponent(p)?;
    if !(l > 1.0) {
        return Err(Error::InvalidParameter {
            name: "l",
            value: l,
            reason: "gauge slope must exceed 1",
        });
    }
    let jacobian = [[0.0, 0.0], [-1.0 / (p - 1.0), 1.0 - l]];
    // Lower triangular: the eigenvalues are the diagonal entries.
    Ok(Linearization {
        jacobian,
        eigenvalues: [0.0, 1.0 - l],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
}

/// `λ = λ₀(t*-t)^{-1/2}`, `b = (p-1)²/(4p|ln(t*-t)|)`,
/// `c = 1/2 - (p-1)/(4p|ln(t*-t)|)`.
pub fn asymptotic_laws(t: f64, t_star: f64, p: f64, lambda0: f64) -> Result<AsymptoticPrediction> {
    ensure_exponent(p)?;
    let s = t_star - t;
    if !(s > 0.0) {
        return Err(Error::AfterBlowup { t, t_star });
    }
    if !(s < 1.0) {
        return Err(Error::InvalidParameter {
            name: "t* - t",
            value: s,
            reason: "logarithmic laws need t* - t < 1",
        });
    }
    let log = s.ln().abs();
    Ok(AsymptoticPrediction {
        lambda: lambda0 / s.sqrt(),
        b: (p - 1.0).powi(2) / (4.0 * p * log),
        c: 0.5 - (p - 1.0) / (4.0 * p * log),
    })
}

/// One fitted law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawFit {
    pub name: String,
    pub target: f64,
    pub fitted: f64,
    pub relative_error: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

impl LawFit {
    fn new(name: &str, target: f64, fitted: f64, rms: f64, window: (f64, f64), samples: usize) -> Self {
        Self {
            name: name.to_string(),
            target,
            fitted,
            relative_error: (fitted - target).abs() / target.abs(),
            rms_residual: rms,
            window,
            samples,
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.relative_error <= tol
    }
}

/// Slope of `1/b` against `τ` over `[lo, hi]`, target `4p/(p-1)²`.
pub fn fit_inverse_b_slope(tau: &[f64], b: &[f64], p: f64, window: (f64, f64)) -> Result<LawFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = tau
        .iter()
        .zip(b)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, b)| (*t, 1.0 / b))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: x.len() });
    }
    let fit = fit_line(&x, &y)?;
    Ok(LawFit::new("inverse_b_slope", 4.0 * p / (p - 1.0).powi(2), fit.slope, fit.rms_residual, window, x.len()))
}

/// Exponent of `λ` against `t* - t`, target `-1/2`; `window` bounds `t* - t`.
pub fn fit_lambda_exponent(remaining: &[f64], lambda: &[f64], window: (f64, f64)) -> Result<LawFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = remaining
        .iter()
        .zip(lambda)
        .filter(|(s, _)| **s >= window.0 && **s <= window.1 && **s > 0.0)
        .map(|(s, l)| (s.ln(), l.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: x.len() });
    }
    let fit = fit_line(&x, &y)?;
    Ok(LawFit::new("lambda_exponent", -0.5, fit.slope, fit.rms_residual, window, x.len()))
}

/// Coefficient of `b ≈ K/|ln(t*-t)|`, target `(p-1)²/(4p)`. Fits
/// `1/b = |ln(t*-t)|/K + const` so that slowly varying corrections go into
/// the intercept.
pub fn fit_b_log_coefficient(remaining: &[f64], b: &[f64], p: f64, window: (f64, f64)) -> Result<LawFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = remaining
        .iter()
        .zip(b)
        .filter(|(s, _)| **s >= window.0 && **s <= window.1 && **s > 0.0 && **s < 1.0)
        .map(|(s, b)| (s.ln().abs(), 1.0 / b))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: x.len() });
    }
    let fit = fit_line(&x, &y)?;
    Ok(LawFit::new("b_log_coefficient", (p - 1.0).powi(2) / (4.0 * p), 1.0 / fit.slope, fit.rms_residual, window, x.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fits: Vec<LawFit>,
}

/// Inputs to [`fit_blowup_laws`], one entry per decomposition sample.
#[derive(Debug, Clone, Default)]
pub struct LawSamples {
    pub tau: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `t* - t` at each sample, from the blowup estimate.
    pub remaining: Vec<f64>,
}

/// All three fits. `tau_window` applies to the `1/b` slope; the `λ` and
/// `b`-log fits use the samples with `τ` in the same window.
pub fn fit_blowup_laws(s: &LawSamples, p: f64, tau_window: (f64, f64)) -> Result<FitReport> {
    let in_window: Vec<usize> = (0..s.tau.len())
        .filter(|&i| s.tau[i] >= tau_window.0 && s.tau[i] <= tau_window.1)
        .collect();
    if in_window.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: in_window.len() });
    }
    let pick = |v: &[f64]| in_window.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let rem = pick(&s.remaining);
    let rwin = (
        rem.iter().copied().fold(f64::INFINITY, f64::min),
        rem.iter().copied().fold(0.0, f64::max),
    );
    Ok(FitReport {
        fits: vec![
            fit_inverse_b_slope(&s.tau, &s.b, p, tau_window)?,
            fit_lambda_exponent(&rem, &pick(&s.lambda), rwin)?,
            fit_b_log_coefficient(&rem, &pick(&s.b), p, rwin)?,
        ],
    })
}

/// State at one time, in similarity variables: `u(x) = λ^{2/(p-1)} v(λx)`.
#[derive(Debug, Clone)]
pub struct ProfileSnapshot {
    pub remaining: f64,
    pub lambda: f64,
    pub v: Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLimitSeries {
    pub radius: f64,
    pub remaining: Vec<f64>,
    pub deviation: Vec<f64>,
    /// Largest `|d(y) - d(-y)|` seen.
    pub asymmetry: f64,
}

impl ProfileLimitSeries {
    pub fn decreasing(&self) -> bool {
        self.deviation.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }
}

/// `sup_{|y|≤R} |s^{1/(p-1)} u(y√(s|ln s|)) - (p-1)^{-1/(p-1)}(1 + (p-1)y²/(4p))^{-1/(p-1)}|`
/// with `s = t* - t`, for snapshots ordered by decreasing `s`.
pub fn profile_limit_check(snaps: &[ProfileSnapshot], p: f64, radius: f64) -> Result<ProfileLimitSeries> {
    ensure_exponent(p)?;
    let q = 1.0 / (p - 1.0);
    let probe = Grid::new(radius.max(1e-12), 201)?;
    let mut out = ProfileLimitSeries {
        radius,
        remaining: Vec::new(),
        deviation: Vec::new(),
        asymmetry: 0.0,
    };
    for snap in snaps {
        let s = snap.remaining;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter {
                name: "t* - t",
                value: s,
                reason: "profile limit needs 0 < t* - t < 1",
            });
        }
        let g = snap.v.grid();
        let spline = UniformSpline::new(-g.half_width(), g.spacing(), snap.v.values())?;
        let stretch = snap.lambda * (s * s.ln().abs()).sqrt();
        let amp = s.powf(q) * snap.lambda.powf(2.0 * q);
        let mut dev = Vec::with_capacity(probe.len());
        for y in probe.nodes() {
            let yy = if radius == 0.0 { 0.0 } else { y };
            let v = spline.eval(yy * stretch).ok_or(Error::InvalidParameter {
                name: "R",
                value: radius,
                reason: "probe radius exceeds the grid image",
            })?;
            let target = (p - 1.0).powf(-q) * (1.0 + (p - 1.0) * yy * yy / (4.0 * p)).powf(-q);
            dev.push(amp * v - target);
        }
        let n = dev.len();
        for i in 0..n / 2 {
            out.asymmetry = out.asymmetry.max((dev[i] - dev[n - 1 - i]).abs());
        }
        out.remaining.push(s);
        out.deviation.push(dev.iter().fold(0.0, |m, d| m.max(d.abs())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Parity;

    #[test]
    fn beta_law_values() {
        let law = BetaLaw::new(0.1, 3.0).unwrap();
        assert_eq!(law.beta(0.0), 0.1);
        assert!((law.beta(10.0) - 0.025).abs() < 1e-15);
        assert_eq!(law.slope(), 3.0);
        assert_eq!(law.kappa(), 0.5);
        assert_eq!(BetaLaw::new(0.1, 1.5).unwrap().kappa(), 0.25);
        let d = (1.0 / law.beta(7.0) - 1.0 / law.beta(3.0)) / 4.0;
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn static_point_is_an_equilibrium() {
        let s = TruncatedState { tau: 0.0, b: 0.0, c: 0.5 };
        let tr = integrate_truncated(s, Gauge::standard(2.0), 3.0, 10.0, 1e-10, None).unwrap();
        assert!(tr.b.iter().all(|b| *b == 0.0));
        assert!(tr.c.iter().all(|c| (c - 0.5).abs() < 1e-15));
    }

    #[test]
    fn b_shadows_beta_and_c_tracks_b() {
        let p = 3.0;
        let b0 = 0.05;
        let s = TruncatedState { tau: 0.0, b: b0, c: 0.5 - b0 / (p - 1.0) };
        let tr = integrate_truncated(s, Gauge::standard(2.0), p, 50.0, 1e-10, None).unwrap();
        let law = BetaLaw::new(b0, p).unwrap();
        let end = tr.last();
        assert_eq!(end.tau, 50.0);
        assert!((end.b / law.beta(50.0) - 1.0).abs() < 0.02);
        for i in 0..tr.tau.len() {
            let b = tr.b[i];
            assert!((tr.c[i] - 0.5 + b / (p - 1.0)).abs() < 2.0 * b * b, "{i}");
        }
        assert!(tr.left_region.is_none());
    }

    #[test]
    fn jacobian_eigenvalues() {
        for (l, e) in [(2.0, -1.0), (1.5, -0.5)] {
            let lin = jacobian_at_equilibrium(l, 3.0).unwrap();
            assert_eq!(lin.eigenvalues, [0.0, e]);
        }
        assert!(jacobian_at_equilibrium(1.0, 3.0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = 3.0;
        for l in [1.5, 2.0, 3.0] {
            let g = Gauge::standard(l);
            let lin = jacobian_at_equilibrium(l, p).unwrap();
            let eps = 1e-6;
            let f = |b: f64, c: f64| truncated_rhs(0.0, b, c, g, p, None);
            let cols = [
                (f(eps, 0.5), f(-eps, 0.5)),
                (f(0.0, 0.5 + eps), f(0.0, 0.5 - eps)),
            ];
            for (j, (plus, minus)) in cols.iter().enumerate() {
                assert!(((plus.0 - minus.0) / (2.0 * eps) - lin.jacobian[0][j]).abs() < 1e-8);
                assert!(((plus.1 - minus.1) / (2.0 * eps) - lin.jacobian[1][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn asymptotic_law_values() {
        let pr = asymptotic_laws(1.0 - 1e-6, 1.0, 3.0, 1.0).unwrap();
        assert!((pr.b - 1.0 / (3.0 * 1e6f64.ln())).abs() < 1e-12);
        assert!((0.5 - pr.c - pr.b / 2.0).abs() < 1e-15);
        assert!(asymptotic_laws(1.0, 1.0, 3.0, 1.0).is_err());
        let a = asymptotic_laws(0.9, 1.0, 3.0, 1.0).unwrap();
        let b = asymptotic_laws(0.99, 1.0, 3.0, 1.0).unwrap();
        assert!((a.lambda * 0.1f64.sqrt() - b.lambda * 0.01f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn truncated_slope_fit() {
        let p = 3.0;
        let s = TruncatedState { tau: 0.0, b: 0.05, c: 0.5 - 0.025 };
        let tr = integrate_truncated(s, Gauge::standard(2.0), p, 100.0, 1e-10, None).unwrap();
        let fit = fit_inverse_b_slope(&tr.tau, &tr.b, p, (10.0, 100.0)).unwrap();
        assert!(fit.within(0.01), "{fit:?}");
    }

    #[test]
    fn homogeneous_profile_limit_at_origin() {
        // u = ((p-1)s)^{-1/(p-1)} gives zero deviation at y = 0.
        let p: f64 = 3.0;
        let g = Grid::new(5.0, 101).unwrap();
        let snaps: Vec<ProfileSnapshot> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&s: &f64| ProfileSnapshot {
                remaining: s,
                lambda: 1.0,
                v: Field::from_fn(g, Parity::Even, |_| ((p - 1.0) * s).powf(-0.5)),
            })
            .collect();
        let r = profile_limit_check(&snaps, p, 0.0).unwrap();
        assert!(r.deviation.iter().all(|d| *d < 1e-12));
        assert_eq!(r.asymmetry, 0.0);
    }
}
