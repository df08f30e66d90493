//! Splitting `v = V_{ab} + e^{a y²/4} ξ` with `ξ ⊥ φ_{0a}, φ_{2a}`, the
//! running majorants of the fluctuation and parameters, and the residuals of
//! the effective parameter equations.

use serde::{Deserialize, Serialize};

use crate::dynamics::BetaLaw;
use crate::error::{ensure_exponent, Error, Result};
use crate::grid::{inner_slices, scale_by_exp, weighted_sup_norm, Field, Grid, Parity, WeightSpec};
use crate::numerics::smoothed_derivative;
use crate::spectral::{gauge_c, hermite_phi, profile_value, ProfileParams};

/// Output of [`solve_g`].
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub params: ProfileParams,
    /// Gauged fluctuation `ξ = e^{-a y²/4} (v - V)`.
    pub xi: Field,
    /// Ungauged remainder `η = v - V`, kept to avoid underflow in the tails.
    pub eta: Field,
    /// `⟨ξ, φ_{0a}⟩` and `⟨ξ, φ_{2a}⟩` with normalized modes.
    pub orthogonality: [f64; 2],
    pub iterations: usize,
    /// `|G|` at the accepted iterate.
    pub residual: f64,
    /// `‖e^{-y²/9} η‖ / b` and `‖e^{-a y²/9} η‖ / b`.
    pub neighborhood: [f64; 2],
}

impl SplitResult {
    /// Parameter window `a ∈ [1/4, 1]`, `0 < b ≤ ε₀`, and the remainder small
    /// compared with `b` in the `e^{-y²/9}` norm.
    pub fn in_neighborhood(&self, eps0: f64) -> bool {
        self.params.in_window() && self.params.b > 0.0 && self.params.b <= eps0 && self.neighborhood[0] < 1.0
    }

    /// `max(|⟨ξ,φ_0⟩|, |⟨ξ,φ_2⟩|) / ‖ξ‖_∞`, zero when `ξ ≡ 0`.
    pub fn relative_orthogonality(&self) -> f64 {
        let n = self.xi.sup_norm();
        let m = self.orthogonality[0].abs().max(self.orthogonality[1].abs());
        if n == 0.0 {
            m
        } else {
            m / n
        }
    }
}

struct Workspace<'a> {
    grid: &'a Grid,
    y2: Vec<f64>,
    v: &'a [f64],
    p: f64,
    l: f64,
}

impl Workspace<'_> {
    fn residual(&self, a: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let p = self.p;
        let c = gauge_c(a, self.l);
        let n = self.y2.len();
        let mut vm = vec![0.0; n];
        let mut w0 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut dav = vec![0.0; n];
        let mut dbv = vec![0.0; n];
        let mut daw0 = vec![0.0; n];
        let mut daw2 = vec![0.0; n];
        for i in 0..n {
            let y2 = self.y2[i];
            let big = profile_value(y2.sqrt(), c, b, p);
            let diff = big - self.v[i];
            let g = (-0.5 * a * y2).exp();
            vm[i] = diff;
            w0[i] = g;
            w2[i] = (1.0 - a * y2) * g;
            dav[i] = big / ((p - 1.0) * c * self.l);
            dbv[i] = -big * y2 / ((p - 1.0) * (p - 1.0 + b * y2));
            daw0[i] = -0.5 * y2 * g;
            daw2[i] = (-y2 - 0.5 * y2 * (1.0 - a * y2)) * g;
        }
        let ip = |f: &[f64], g: &[f64]| inner_slices(self.grid, f, g);
        let res = [ip(&vm, &w0), ip(&vm, &w2)];
        let jac = [
            [ip(&dav, &w0) + ip(&vm, &daw0), ip(&dbv, &w0)],
            [ip(&dav, &w2) + ip(&vm, &daw2), ip(&dbv, &w2)],
        ];
        (res, jac)
    }
}

fn norm2(g: [f64; 2]) -> f64 {
    g[0].abs().max(g[1].abs())
}

fn condition(j: [[f64; 2]; 2]) -> f64 {
    // Ratio of singular values of a 2×2 matrix.
    let a = j[0][0] * j[0][0] + j[1][0] * j[1][0];
    let d = j[0][1] * j[0][1] + j[1][1] * j[1][1];
    let b = j[0][0] * j[0][1] + j[1][0] * j[1][1];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    let smax = (0.5 * (tr + disc)).sqrt();
    let smin = (0.5 * (tr - disc)).max(0.0).sqrt();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Finds `(a, b)` with `⟨V_{ab} - v, e^{-a y²/2}⟩ = ⟨V_{ab} - v, (1 - a y²) e^{-a y²/2}⟩ = 0`
/// by Newton's method with the analytic Jacobian, under the default gauge.
pub fn solve_g(v: &Field, initial: (f64, f64), p: f64) -> Result<SplitResult> {
    solve_g_with_gauge(v, initial, p, 2.0)
}

/// [`solve_g`] under the gauge `a = l c + (1 - l)/2`.
pub fn solve_g_with_gauge(v: &Field, initial: (f64, f64), p: f64, l: f64) -> Result<SplitResult> {
    ensure_exponent(p)?;
    let (mut a, mut b) = initial;
    if !(b > 0.0) {
        return Err(Error::OutOfNeighborhood { a, b });
    }
    if v.parity() == Parity::Odd {
        return Err(Error::InvalidParameter {
            name: "v",
            value: f64::NAN,
            reason: "splitting needs even data",
        });
    }
    let grid = v.grid();
    let ws = Workspace {
        grid,
        y2: grid.nodes().iter().map(|y| y * y).collect(),
        v: v.values(),
        p,
        l,
    };
    let (mut g, mut jac) = ws.residual(a, b);
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    while !(norm2(g) == 0.0 || (norm2(g) < 1e-12 && last_step < 1e-13)) {
        if iterations >= 50 {
            return Err(Error::NewtonFailure {
                iterations,
                residual: norm2(g),
            });
        }
        iterations += 1;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let da = (g[0] * jac[1][1] - g[1] * jac[0][1]) / det;
        let db = (jac[0][0] * g[1] - jac[1][0] * g[0]) / det;
        if !(da.is_finite() && db.is_finite()) {
            return Err(Error::NewtonFailure {
                iterations,
                residual: norm2(g),
            });
        }
        // Damped steps near a singular Jacobian, and backtracking to keep b > 0.
        let mut t = if condition(jac) > 1e8 { 0.5 } else { 1.0 };
        let current = norm2(g);
        let mut accepted = None;
        for _ in 0..30 {
            let (na, nb) = (a - t * da, b - t * db);
            if nb > 0.0 {
                let (ng, nj) = ws.residual(na, nb);
                if norm2(ng) <= current || current < 1e-12 || t < 1e-3 {
                    accepted = Some((na, nb, ng, nj));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((na, nb, ng, nj)) = accepted else {
            return Err(Error::OutOfNeighborhood { a: a - da, b: b - db });
        };
        last_step = (na - a).abs().max((nb - b).abs());
        a = na;
        b = nb;
        g = ng;
        jac = nj;
    }
    let params = ProfileParams::with_gauge(a, b, l)?;
    let c = params.c;
    let eta_vals: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(v.values())
        .map(|(y, vi)| vi - profile_value(*y, c, b, p))
        .collect();
    let eta = Field::new(*grid, eta_vals, Parity::Even)?;
    let xi = eta.map(|y, e| scale_by_exp(e, -0.25 * a * y * y)).with_parity(Parity::Even);
    let phi0 = hermite_phi(0, a, grid)?;
    let phi2 = hermite_phi(2, a, grid)?;
    let orthogonality = [
        inner_slices(grid, xi.values(), phi0.values()),
        inner_slices(grid, xi.values(), phi2.values()),
    ];
    let neighborhood = [
        weighted_sup_norm(&eta, &WeightSpec::new(0, -4.0 / 9.0)?)? / b,
        weighted_sup_norm(&eta, &WeightSpec::new(0, -4.0 * a / 9.0)?)? / b,
    ];
    Ok(SplitResult {
        params,
        xi,
        eta,
        orthogonality,
        iterations,
        residual: norm2(g),
        neighborhood,
    })
}

/// Per-sample summary of a splitting, small enough to keep for every step
/// of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub iterations: usize,
    pub orthogonality: f64,
    /// `‖⟨y⟩^{-3} e^{a y²/4} ξ‖_∞ = ‖⟨y⟩^{-3} η‖_∞`.
    pub weighted_xi: f64,
    /// `sup_{|y| ≥ D} |η|` for each configured cutoff constant.
    pub tail_sup: Vec<f64>,
    /// Whether `{|y| ≥ D}` met the grid for each cutoff constant.
    pub tail_covered: Vec<bool>,
    pub neighborhood: f64,
    pub accepted: bool,
}

impl DecompositionRecord {
    /// Summarizes `split` at time `tau`; cutoff radii are `D = C_D / √β(τ)`.
    pub fn from_split(tau: f64, split: &SplitResult, cutoffs: &[f64], beta: f64, eps0: f64) -> Result<Self> {
        let eta = &split.eta;
        let grid = eta.grid();
        let weighted_xi = weighted_sup_norm(eta, &WeightSpec::new(3, 0.0)?)?;
        let mut tail_sup = Vec::with_capacity(cutoffs.len());
        let mut tail_covered = Vec::with_capacity(cutoffs.len());
        for cd in cutoffs {
            let d = cd / beta.sqrt();
            let mut s = 0.0f64;
            let mut any = false;
            for (i, e) in eta.values().iter().enumerate() {
                if grid.node(i).abs() >= d {
                    any = true;
                    s = s.max(e.abs());
                }
            }
            tail_sup.push(s);
            tail_covered.push(any);
        }
        Ok(Self {
            tau,
            a: split.params.a,
            b: split.params.b,
            c: split.params.c,
            iterations: split.iterations,
            orthogonality: split.relative_orthogonality(),
            weighted_xi,
            tail_sup,
            tail_covered,
            neighborhood: split.neighborhood[0],
            accepted: split.in_neighborhood(eps0),
        })
    }
}

/// Running maxima `M₂` for one cutoff constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSeries {
    pub c_d: f64,
    pub d: Vec<f64>,
    pub m2: Vec<f64>,
    /// Samples where the cutoff region met the grid.
    pub covered: Vec<bool>,
}

impl CutoffSeries {
    pub fn coverage(&self) -> f64 {
        if self.covered.is_empty() {
            return 0.0;
        }
        self.covered.iter().filter(|c| **c).count() as f64 / self.covered.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSeries {
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
    pub m1: Vec<f64>,
    pub a_maj: Vec<f64>,
    pub b_maj: Vec<f64>,
    pub m2: Vec<CutoffSeries>,
    pub kappa: f64,
}

impl MajorantSeries {
    /// Value at the first sample with `τ ≥ tau`, or the last value.
    pub fn value_at(series: &[f64], taus: &[f64], tau: f64) -> f64 {
        let i = taus.partition_point(|&t| t < tau).min(series.len() - 1);
        series[i]
    }
}

fn running_max(raw: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut m = 0.0f64;
    raw.map(|x| {
        m = m.max(x);
        m
    })
    .collect()
}

/// `M₁ = max β^{-2}‖⟨y⟩^{-3} e^{ay²/4} ξ‖`, `M₂ = max ‖e^{ay²/4} χ_{≥D} ξ‖`,
/// `A = max β^{-2}|a - 1/2 + 2b/(p-1)|`, `B = max β^{-(1+κ)}|b - β|`.
pub fn compute_majorants(history: &[DecompositionRecord], law: &BetaLaw, cutoffs: &[f64]) -> MajorantSeries {
    let p = law.p;
    let kappa = law.kappa();
    let tau: Vec<f64> = history.iter().map(|r| r.tau).collect();
    let beta: Vec<f64> = tau.iter().map(|t| law.beta(*t)).collect();
    let m1 = running_max(history.iter().zip(&beta).map(|(r, b)| r.weighted_xi / (b * b)));
    let a_maj = running_max(
        history
            .iter()
            .zip(&beta)
            .map(|(r, bt)| (r.a - 0.5 + 2.0 * r.b / (p - 1.0)).abs() / (bt * bt)),
    );
    let b_maj = running_max(
        history
            .iter()
            .zip(&beta)
            .map(|(r, bt)| (r.b - bt).abs() / bt.powf(1.0 + kappa)),
    );
    let m2 = cutoffs
        .iter()
        .enumerate()
        .map(|(k, cd)| CutoffSeries {
            c_d: *cd,
            d: beta.iter().map(|b| cd / b.sqrt()).collect(),
            m2: running_max(history.iter().map(|r| r.tail_sup.get(k).copied().unwrap_or(0.0))),
            covered: history.iter().map(|r| r.tail_covered.get(k).copied().unwrap_or(false)).collect(),
        })
        .collect();
    MajorantSeries {
        tau,
        beta,
        m1,
        a_maj,
        b_maj,
        m2,
        kappa,
    }
}

/// Samples of the effective-equation quantities along a parameter history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRhs {
    pub tau: Vec<f64>,
    pub a_tau: Vec<f64>,
    pub b_tau: Vec<f64>,
    pub c_tau: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub r_b: Vec<f64>,
    pub r_c: Vec<f64>,
}

/// Parameter history `(τ, a, b, c)` sampled along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamHistory {
    pub tau: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ParamHistory {
    pub fn from_records(records: &[DecompositionRecord]) -> Self {
        Self {
            tau: records.iter().map(|r| r.tau).collect(),
            a: records.iter().map(|r| r.a).collect(),
            b: records.iter().map(|r| r.b).collect(),
            c: records.iter().map(|r| r.c).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// `Γ₀ = -c_τ/c + 2(c-a) - 2b/(p-1)` and
/// `Γ₁ = (b_τ - 2b(c-a) + 2(3p-1)b²/(p-1)²) / (a(p-1))`, with derivatives
/// from local quadratic fits over `window` samples.
pub fn compute_gammas(hist: &ParamHistory, p: f64, window: usize) -> Result<EffectiveRhs> {
    ensure_exponent(p)?;
    if let Some(i) = hist.a.iter().position(|a| *a == 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: hist.a[i],
            reason: "Γ₁ divides by a",
        });
    }
    let a_tau = smoothed_derivative(&hist.tau, &hist.a, window)?;
    let b_tau = smoothed_derivative(&hist.tau, &hist.b, window)?;
    let c_tau = smoothed_derivative(&hist.tau, &hist.c, window)?;
    let q = 2.0 * (3.0 * p - 1.0) / (p - 1.0).powi(2);
    let n = hist.len();
    let mut gamma0 = Vec::with_capacity(n);
    let mut gamma1 = Vec::with_capacity(n);
    let mut r_b = Vec::with_capacity(n);
    let mut r_c = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, c) = (hist.a[i], hist.b[i], hist.c[i]);
        let rb = b_tau[i] + q * b * b - 2.0 * b * (c - a);
        let rc = c_tau[i] / c - 2.0 * (c - a) + 2.0 * b / (p - 1.0);
        gamma0.push(-rc);
        gamma1.push(rb / (a * (p - 1.0)));
        r_b.push(rb);
        r_c.push(rc);
    }
    Ok(EffectiveRhs {
        tau: hist.tau.clone(),
        a_tau,
        b_tau,
        c_tau,
        gamma0,
        gamma1,
        r_b,
        r_c,
    })
}

/// `(ℛ_b, ℛ_c)` along the history.
pub fn measure_remainders(hist: &ParamHistory, p: f64, window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rhs = compute_gammas(hist, p, window)?;
    Ok((rhs.r_b, rhs.r_c))
}

/// Order bound `β³ + β³M₁(1+A) + β⁴M₁² + β^{2p}M₁^p` for the remainders.
pub fn remainder_scale(beta: f64, m1: f64, a_maj: f64, p: f64) -> f64 {
    beta.powi(3) + beta.powi(3) * m1 * (1.0 + a_maj) + beta.powi(4) * m1 * m1 + beta.powf(2.0 * p) * m1.powf(p)
}

/// `ℱ = (1/(p-1))[Γ₀ + Γ₁(p-1)ay²/(p-1+by²) + G₁] v_{abc}` with
/// `G₁ = -4pb³y⁴/((p-1)²(p-1+by²)²)`.
pub fn evaluate_f(params: &ProfileParams, gamma0: f64, gamma1: f64, p: f64, grid: &Grid) -> Result<Field> {
    ensure_exponent(p)?;
    let ProfileParams { a, b, c, .. } = *params;
    Ok(Field::from_fn(*grid, Parity::Even, |y| {
        let y2 = y * y;
        let den = p - 1.0 + b * y2;
        let g1 = -4.0 * p * b.powi(3) * y2 * y2 / ((p - 1.0).powi(2) * den * den);
        let bracket = gamma0 + gamma1 * (p - 1.0) * a * y2 / den + g1;
        bracket / (p - 1.0) * scale_by_exp(profile_value(y, c, b, p), -0.25 * a * y2)
    }))
}

/// `e^{a y²/4} ℱ` without forming the Gaussian factor.
pub fn evaluate_f_ungauged(params: &ProfileParams, gamma0: f64, gamma1: f64, p: f64, grid: &Grid) -> Result<Field> {
    let ProfileParams { a, b, c, .. } = *params;
    Ok(Field::from_fn(*grid, Parity::Even, |y| {
        let y2 = y * y;
        let den = p - 1.0 + b * y2;
        let g1 = -4.0 * p * b.powi(3) * y2 * y2 / ((p - 1.0).powi(2) * den * den);
        (gamma0 + gamma1 * (p - 1.0) * a * y2 / den + g1) / (p - 1.0) * profile_value(y, c, b, p)
    }))
}

/// `𝒩(ξ) = e^{(p-1)a y²/4}[|ξ+v|^{p-1}(ξ+v) - v^p - p v^{p-1} ξ]` with
/// `v = v_{abc}`, computed from `η = e^{a y²/4} ξ` as
/// `e^{-a y²/4}[|η+V|^{p-1}(η+V) - V^p - p V^{p-1} η]`.
pub fn evaluate_n(eta: &Field, params: &ProfileParams, p: f64) -> Result<Field> {
    ensure_exponent(p)?;
    let ProfileParams { a, b, c, .. } = *params;
    Ok(eta.map(|y, e| scale_by_exp(n_bracket(e, profile_value(y, c, b, p), p), -0.25 * a * y * y)))
}

fn n_bracket(eta: f64, big: f64, p: f64) -> f64 {
    // V^p h(η/V) with h(x) = |1+x|^{p-1}(1+x) - 1 - p x; a Taylor series
    // avoids the cancellation for small x.
    let x = eta / big;
    let h = if x.abs() < 1e-3 {
        let c2 = p * (p - 1.0) / 2.0;
        let c3 = c2 * (p - 2.0) / 3.0;
        let c4 = c3 * (p - 3.0) / 4.0;
        x * x * (c2 + x * (c3 + x * c4))
    } else {
        let s = 1.0 + x;
        s.abs().powf(p - 1.0) * s - 1.0 - p * x
    };
    big.powf(p) * h
}

/// Largest nodewise ratio `|𝒩| / (e^{ay²/4}|ξ|² + e^{(p-1)ay²/4}|ξ|^p)`.
pub fn nonlinearity_constant(eta: &Field, params: &ProfileParams, p: f64) -> f64 {
    let ProfileParams { b, c, .. } = *params;
    let grid = eta.grid();
    eta.values()
        .iter()
        .enumerate()
        .filter(|(_, e)| **e != 0.0)
        .map(|(i, e)| {
            let big = profile_value(grid.node(i), c, b, p);
            n_bracket(*e, big, p).abs() / (e * e + e.abs().powf(p))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{hermite_function, profile, ProfileKind};

    fn grid() -> Grid {
        Grid::new(40.0, 4001).unwrap()
    }

    fn ungauged(a: f64, b: f64, p: f64) -> Field {
        profile(ProfileKind::Ungauged, &ProfileParams::new(a, b).unwrap(), p, &grid()).unwrap()
    }

    #[test]
    fn exact_profile_is_a_fixed_point() {
        let v = ungauged(0.5, 0.05, 3.0);
        let s = solve_g(&v, (0.5, 0.05), 3.0).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.xi.sup_norm() == 0.0);
        let s2 = solve_g(&v, (0.45, 0.07), 3.0).unwrap();
        assert!((s2.params.a - 0.5).abs() < 1e-12 && (s2.params.b - 0.05).abs() < 1e-12);
    }

    #[test]
    fn odd_perturbation_leaves_parameters_unchanged() {
        let g = grid();
        let v = ungauged(0.6, 0.04, 3.0);
        let odd = Field::from_fn(g, Parity::Odd, |y| y * (-y * y / 5.0).exp());
        let w = v.axpy(1e-3, &odd).unwrap().with_parity(Parity::None);
        let s = solve_g_inner(&w, (0.6, 0.04));
        assert!((s.params.a - 0.6).abs() < 1e-12 && (s.params.b - 0.04).abs() < 1e-12);
    }

    fn solve_g_inner(v: &Field, init: (f64, f64)) -> SplitResult {
        solve_g(v, init, 3.0).unwrap()
    }

    #[test]
    fn shift_is_linear_in_perturbation_size() {
        let g = grid();
        let (a0, b0) = (0.5, 0.05);
        let v0 = ungauged(a0, b0, 3.0);
        let dir = hermite_function(4, a0, &g).unwrap();
        let mut consts = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let v = v0.axpy(eps, &dir).unwrap().with_parity(Parity::Even);
            let s = solve_g(&v, (a0, b0), 3.0).unwrap();
            assert!(s.relative_orthogonality() < 1e-10);
            let shift = (s.params.a - a0).abs().max((s.params.b - b0).abs());
            let size = weighted_sup_norm(&dir.scale(eps), &WeightSpec::new(0, -4.0 * a0 / 9.0).unwrap()).unwrap();
            consts.push(shift / size);
        }
        let (lo, hi) = consts.iter().fold((f64::MAX, 0.0f64), |(l, h), c| (l.min(*c), h.max(*c)));
        assert!(hi / lo < 1.2, "{consts:?}");
    }

    #[test]
    fn non_positive_b_is_rejected() {
        let v = ungauged(0.5, 0.05, 3.0);
        assert!(matches!(solve_g(&v, (0.5, 0.0), 3.0), Err(Error::OutOfNeighborhood { .. })));
    }

    #[test]
    fn majorants_vanish_on_the_reference_law() {
        let law = BetaLaw::new(0.1, 3.0).unwrap();
        let hist: Vec<DecompositionRecord> = (0..50)
            .map(|k| {
                let tau = 0.2 * k as f64;
                let b = law.beta(tau);
                DecompositionRecord {
                    tau,
                    a: 0.5 - 2.0 * b / 2.0,
                    b,
                    c: 0.0,
                    iterations: 0,
                    orthogonality: 0.0,
                    weighted_xi: 0.0,
                    tail_sup: vec![0.0],
                    tail_covered: vec![true],
                    neighborhood: 0.0,
                    accepted: true,
                }
            })
            .collect();
        let m = compute_majorants(&hist, &law, &[5.0]);
        assert!(m.m1.iter().chain(&m.m2[0].m2).all(|x| *x == 0.0));
        assert!(m.a_maj.iter().all(|x| *x < 1e-12));
        assert!(m.b_maj.iter().all(|x| *x < 1e-12));
        assert_eq!(m.b_maj[0], 0.0);
        assert_eq!(m.kappa, 0.5);
    }

    #[test]
    fn gammas_vanish_at_the_static_point() {
        let hist = ParamHistory {
            tau: (0..10).map(|k| k as f64).collect(),
            a: vec![0.5; 10],
            b: vec![0.0; 10],
            c: vec![0.5; 10],
        };
        let r = compute_gammas(&hist, 3.0, 5).unwrap();
        assert!(r.gamma0.iter().chain(&r.gamma1).all(|g| g.abs() < 1e-15));
        let zero_a = ParamHistory { a: vec![0.0; 10], ..hist };
        assert!(compute_gammas(&zero_a, 3.0, 5).is_err());
    }

    #[test]
    fn gamma1_on_the_pure_b_law() {
        // b_τ = -4p b²/(p-1)², c = a: Γ₁ = 2b²/(a(p-1)²).
        let p: f64 = 3.0;
        let law = BetaLaw::new(0.05, p).unwrap();
        let tau: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
        let b: Vec<f64> = tau.iter().map(|t| law.beta(*t)).collect();
        let hist = ParamHistory { tau: tau.clone(), a: vec![0.5; 200], b: b.clone(), c: vec![0.5; 200] };
        let r = compute_gammas(&hist, p, 5).unwrap();
        for i in 2..198 {
            let expect = 2.0 * b[i] * b[i] / (0.5 * (p - 1.0).powi(2));
            assert!((r.gamma1[i] - expect).abs() < 1e-3 * expect, "{} {}", r.gamma1[i], expect);
        }
    }

    #[test]
    fn forcing_and_nonlinearity_vanish_trivially() {
        let g = grid();
        let params = ProfileParams::new(0.5, 0.0).unwrap();
        assert_eq!(evaluate_f(&params, 0.0, 0.0, 3.0, &g).unwrap().sup_norm(), 0.0);
        assert_eq!(evaluate_n(&Field::zeros(g), &params, 3.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn nonlinearity_bound_constant() {
        let g = grid();
        let params = ProfileParams::new(0.5, 0.05).unwrap();
        let eta = Field::from_fn(g, Parity::Even, |y| 0.3 * (y / 3.0).cos() * (-y * y / 50.0).exp());
        let k = nonlinearity_constant(&eta, &params, 3.0);
        assert!(k > 0.0 && k <= 3.0 + 3.0, "{k}");
        let n = evaluate_n(&eta, &params, 3.0).unwrap();
        let bound = eta.map(|y, e| scale_by_exp(k * (e * e + e.abs().powi(3)), -0.125 * y * y));
        assert!(n.values().iter().zip(bound.values()).all(|(x, b)| x.abs() <= b * (1.0 + 1e-12)));
    }
}
