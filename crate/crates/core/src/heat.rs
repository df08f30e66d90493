//! Forward solvers for `u_t = u_xx + |u|^{p-1} u`: a Duhamel fixed point on
//! short slabs, a Strang-split IMEX integrator run to blowup, the same
//! integrator in similarity variables, and the energy functionals.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_exponent, ensure_positive, Error, Result};
use crate::grid::{Field, Grid};
use crate::numerics::fit_line;
use crate::tridiag::Tridiagonal;

/// Initial-value problem on a grid with zero Dirichlet data at `±L`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub p: f64,
    pub u0: Field,
    pub horizon: f64,
    /// Blowup is declared once `‖u‖_∞` exceeds this value.
    pub cap: f64,
    pub dt_max: f64,
    /// Step size is `min(dt_max, c_safe ‖u‖^{1-p})`.
    pub c_safe: f64,
}

impl Problem {
    pub fn new(p: f64, u0: Field, horizon: f64) -> Self {
        Self {
            p,
            u0,
            horizon,
            cap: 1e6,
            dt_max: 1e-3,
            c_safe: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure_exponent(self.p)?;
        ensure_positive("horizon", self.horizon)?;
        ensure_positive("dt_max", self.dt_max)?;
        ensure_positive("c_safe", self.c_safe)?;
        if !self.u0.is_finite() {
            return Err(Error::NonFinite("initial data"));
        }
        Ok(())
    }
}

/// Applies the heat semigroup `e^{tΔ}` by discrete convolution with
/// `(4πt)^{-1/2} e^{-(x-y)²/(4t)}`. The sampled kernel is normalized by its
/// lattice sum so that mass is preserved for data supported inside the grid.
pub fn heat_semigroup_apply(f: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "heat semigroup needs t >= 0",
        });
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let reach = ((14.0 * t.sqrt() / h).ceil() as usize).max(1).min(grid.len() - 1);
    let raw: Vec<f64> = (0..=reach)
        .map(|k| {
            let x = k as f64 * h;
            (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
        })
        .collect();
    let mass = h * (raw[0] + 2.0 * raw[1..].iter().sum::<f64>());
    let kernel: Vec<f64> = raw.iter().map(|k| k * h / mass).collect();
    let v = f.values();
    let n = v.len();
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            (lo..=hi).map(|j| kernel[i.abs_diff(j)] * v[j]).sum()
        })
        .collect();
    Ok(Field::from_raw(grid, out, f.parity()))
}

/// Local existence time `½ min[((2p)^p ‖u0‖^{p-1})^{-1}, 1]`.
pub fn local_time(p: f64, sup0: f64) -> f64 {
    let inv = (2.0 * p).powf(p) * sup0.powf(p - 1.0);
    0.5 * (1.0 / inv).min(1.0)
}

/// A priori bound `max[2^{1/p} p ‖u0‖, 2^{1/p} ‖u0‖^{1/p}]` on the local slab.
pub fn local_bound(p: f64, sup0: f64) -> f64 {
    let c = 2f64.powf(1.0 / p);
    (c * p * sup0).max(c * sup0.powf(1.0 / p))
}

/// Fixed point of the Duhamel map on a time slab.
#[derive(Debug, Clone)]
pub struct DuhamelSolution {
    pub times: Vec<f64>,
    pub trajectory: Vec<Field>,
    pub slab: f64,
    pub iterations: usize,
    /// Sup-norm difference between successive iterates.
    pub history: Vec<f64>,
    pub bound: f64,
    pub max_sup: f64,
}

impl DuhamelSolution {
    pub fn bound_holds(&self) -> bool {
        self.max_sup <= self.bound
    }
}

/// Iterates the Duhamel map on `[0, T_local]`.
pub fn duhamel_local_solve(prob: &Problem) -> Result<DuhamelSolution> {
    prob.validate()?;
    let sup0 = prob.u0.sup_norm();
    let slab = local_time(prob.p, sup0);
    let h = prob.u0.grid().spacing();
    // Keep the kernel width √(2Δt) at least one grid spacing.
    let slices = ((slab / (0.5 * h * h)).floor() as usize).clamp(1, 64);
    duhamel_solve(prob.p, &prob.u0, slab, slices)
}

/// Picard iteration for `u = e^{tΔ}u0 + ∫₀ᵗ e^{(t-s)Δ}|u|^{p-1}u ds` with the
/// time integral discretized by the composite trapezoid rule on `slices`
/// equal steps.
pub fn duhamel_solve(p: f64, u0: &Field, slab: f64, slices: usize) -> Result<DuhamelSolution> {
    ensure_exponent(p)?;
    ensure_positive("slab", slab)?;
    let slices = slices.max(1);
    let dt = slab / slices as f64;
    let grid = *u0.grid();
    let times: Vec<f64> = (0..=slices).map(|k| k as f64 * dt).collect();
    let mut free = vec![u0.clone()];
    for _ in 0..slices {
        let next = heat_semigroup_apply(free.last().unwrap(), dt)?;
        free.push(next);
    }
    let mut u = free.clone();
    let mut history = Vec::new();
    let mut iterations = 0;
    let reaction = |f: &Field| f.map(|_, v| v.abs().powf(p - 1.0) * v);
    loop {
        iterations += 1;
        let mut integral = Field::zeros(grid);
        let mut next = Vec::with_capacity(u.len());
        next.push(free[0].clone());
        let mut f_prev = reaction(&u[0]);
        for k in 0..slices {
            let f_next = reaction(&u[k + 1]);
            let carried = heat_semigroup_apply(&integral.axpy(0.5 * dt, &f_prev)?, dt)?;
            integral = carried.axpy(0.5 * dt, &f_next)?;
            next.push(free[k + 1].add(&integral)?.with_parity(u0.parity()));
            f_prev = f_next;
        }
        let diff = u
            .iter()
            .zip(&next)
            .map(|(a, b)| a.sub(b).map(|d| d.sup_norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        history.push(diff);
        u = next;
        if !diff.is_finite() || diff > 1e12 {
            return Err(Error::ContractionFailure { history });
        }
        if diff < 1e-10 {
            break;
        }
        let growing = history.len() >= 6 && history.windows(2).rev().take(5).all(|w| w[1] > w[0]);
        if growing || iterations >= 500 {
            return Err(Error::ContractionFailure { history });
        }
    }
    let sup0 = u0.sup_norm();
    let max_sup = u.iter().map(Field::sup_norm).fold(0.0, f64::max);
    Ok(DuhamelSolution {
        times,
        trajectory: u,
        slab,
        iterations,
        history,
        bound: local_bound(p, sup0),
        max_sup,
    })
}

/// Exact flow of `u' = |u|^{p-1} u` over time `dt`; `None` if the node blows
/// up within the step.
pub fn reaction_flow(u: f64, dt: f64, p: f64) -> Option<f64> {
    if u == 0.0 {
        return Some(0.0);
    }
    let base = u.abs().powf(1.0 - p) - (p - 1.0) * dt;
    if base <= 0.0 {
        return None;
    }
    Some(u.signum() * base.powf(-1.0 / (p - 1.0)))
}

fn react(values: &mut [f64], dt: f64, p: f64) -> Result<()> {
    for v in values.iter_mut() {
        *v = reaction_flow(*v, dt, p).ok_or(Error::NonFinite("reaction substep"))?;
    }
    Ok(())
}

/// Linear part `A` of a split step, stored as a tridiagonal matrix over all
/// nodes. `dirichlet` pins the end values to zero.
#[derive(Debug, Clone)]
pub struct LinearPart {
    a: Tridiagonal,
    dirichlet: bool,
}

impl LinearPart {
    /// `∂²` with zero Dirichlet data.
    pub fn heat(grid: &Grid) -> Self {
        let n = grid.len();
        let h2 = grid.spacing().powi(2);
        let mut sub = vec![1.0 / h2; n - 1];
        let mut diag = vec![-2.0 / h2; n];
        let mut sup = vec![1.0 / h2; n - 1];
        diag[0] = 0.0;
        diag[n - 1] = 0.0;
        sup[0] = 0.0;
        sub[n - 2] = 0.0;
        Self {
            a: Tridiagonal::new(sub, diag, sup),
            dirichlet: true,
        }
    }

    /// `∂² - a y ∂ - 2a/(p-1)` written as `ρ^{-1}∂(ρ∂) - 2a/(p-1)` with
    /// `ρ = e^{-a y²/2}` evaluated at half nodes. The off-diagonals stay
    /// positive for any `a y h`, so no upwinding is needed. At `±L` a ghost
    /// node continues the field by the far-field decay `|y|^{-2/(p-1)}`.
    pub fn similarity(grid: &Grid, a: f64, p: f64) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let h2 = h * h;
        let k = 2.0 * a / (p - 1.0);
        let up = |y: f64| (-0.5 * a * (y * h + 0.25 * h2)).exp() / h2;
        let down = |y: f64| (-0.5 * a * (-y * h + 0.25 * h2)).exp() / h2;
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        let l = grid.half_width();
        let ghost = (l / (l + h)).powf(2.0 / (p - 1.0));
        for i in 0..n {
            let y = grid.node(i);
            let (cu, cd) = (up(y), down(y));
            diag[i] = -cu - cd - k;
            if i + 1 < n {
                sup[i] = cu;
            } else {
                diag[i] += cu * ghost;
            }
            if i > 0 {
                sub[i - 1] = cd;
            } else {
                diag[i] += cd * ghost;
            }
        }
        Self {
            a: Tridiagonal::new(sub, diag, sup),
            dirichlet: false,
        }
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.a
    }

    fn shifted(&self, c: f64) -> Tridiagonal {
        // I - c A
        Tridiagonal::new(
            self.a.sub.iter().map(|v| -c * v).collect(),
            self.a.diag.iter().map(|v| 1.0 - c * v).collect(),
            self.a.sup.iter().map(|v| -c * v).collect(),
        )
    }

    /// One TR-BDF2 step of `u' = A u` (L-stable, second order).
    pub fn tr_bdf2(&self, u: &[f64], dt: f64) -> Result<Vec<f64>> {
        let g = 2.0 - 2f64.sqrt();
        let au = self.a.apply(u);
        let mut rhs: Vec<f64> = u.iter().zip(&au).map(|(v, w)| v + 0.5 * g * dt * w).collect();
        self.pin(&mut rhs);
        let stage = self.shifted(0.5 * g * dt).solve(&rhs)?;
        let c1 = 1.0 / (g * (2.0 - g));
        let c0 = (1.0 - g).powi(2) / (g * (2.0 - g));
        let mut rhs2: Vec<f64> = stage.iter().zip(u).map(|(s, v)| c1 * s - c0 * v).collect();
        self.pin(&mut rhs2);
        let mut out = self.shifted((1.0 - g) / (2.0 - g) * dt).solve(&rhs2)?;
        self.pin(&mut out);
        Ok(out)
    }

    fn pin(&self, v: &mut [f64]) {
        if self.dirichlet {
            let n = v.len();
            v[0] = 0.0;
            v[n - 1] = 0.0;
        }
    }

    /// Strang step: half reaction, full linear step, half reaction.
    pub fn strang_step(&self, u: &[f64], dt: f64, p: f64) -> Result<Vec<f64>> {
        let mut w = u.to_vec();
        react(&mut w, 0.5 * dt, p)?;
        let mut w = self.tr_bdf2(&w, dt)?;
        react(&mut w, 0.5 * dt, p)?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("split step"));
        }
        Ok(w)
    }
}

/// One Strang step (exact reaction, TR-BDF2 diffusion) of the equation in
/// the original variables with zero Dirichlet data.
pub fn step_imex(u: &Field, dt: f64, p: f64) -> Result<Field> {
    ensure_exponent(p)?;
    ensure_positive("dt", dt)?;
    let lin = LinearPart::heat(u.grid());
    let out = lin.strang_step(u.values(), dt, p)?;
    Ok(Field::from_raw(*u.grid(), out, u.parity()))
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    HorizonReached,
    BlowupDetected,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub sup_norm: f64,
    pub dt: f64,
    pub energy_e: f64,
    pub lyapunov_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl SolveTrace {
    /// CSV with columns `t,sup_norm,dt,energy_E,lyapunov_S`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup_norm,dt,energy_E,lyapunov_S\n");
        for r in &self.records {
            let lyap = r.lyapunov_s.map(|v| format!("{v:.17e}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.t, r.sup_norm, r.dt, r.energy_e, lyap
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_star: f64,
    pub method: &'static str,
    /// RMS residual of the linear fit, relative to the window's first value.
    pub residual: f64,
    pub last_time: f64,
    pub window: usize,
}

/// Result of [`solve_to_blowup`], including the final state.
#[derive(Debug, Clone)]
pub struct BlowupRun {
    pub trace: SolveTrace,
    pub estimate: Option<BlowupEstimate>,
    pub final_state: Field,
}

/// Integrates until the sup norm exceeds the cap, the step underflows or the
/// horizon is reached. The blowup time is extrapolated from the final window
/// of `‖u‖^{-(p-1)}` against `t`.
pub fn solve_to_blowup(prob: &Problem) -> Result<BlowupRun> {
    prob.validate()?;
    let p = prob.p;
    let grid = *prob.u0.grid();
    let lin = LinearPart::heat(&grid);
    let mut u = prob.u0.values().to_vec();
    let n = u.len();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let mut t = 0.0;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut records = vec![TraceRecord {
        t,
        sup_norm: sup(&u),
        dt: 0.0,
        energy_e: energy_slice(&grid, &u, p),
        lyapunov_s: None,
    }];
    let termination = loop {
        let s = sup(&u);
        if s > prob.cap {
            break Termination::BlowupDetected;
        }
        if t >= prob.horizon * (1.0 - 1e-14) {
            break Termination::HorizonReached;
        }
        let mut dt = prob.dt_max.min(prob.c_safe * s.powf(1.0 - p)).min(prob.horizon - t);
        let next = loop {
            if dt < 1e-14 {
                break None;
            }
            match lin.strang_step(&u, dt, p) {
                Ok(v) => break Some(v),
                Err(Error::NonFinite(_)) => dt *= 0.5,
                Err(e) => return Err(e),
            }
        };
        let Some(next) = next else {
            break Termination::StepUnderflow;
        };
        u = next;
        t += dt;
        records.push(TraceRecord {
            t,
            sup_norm: sup(&u),
            dt,
            energy_e: energy_slice(&grid, &u, p),
            lyapunov_s: None,
        });
    };
    let trace = SolveTrace {
        records,
        termination,
    };
    let estimate = match termination {
        Termination::HorizonReached => None,
        _ => estimate_blowup_time(&trace, p, 20),
    };
    Ok(BlowupRun {
        trace,
        estimate,
        final_state: Field::from_raw(grid, u, prob.u0.parity()),
    })
}

/// Linear extrapolation of `‖u‖^{-(p-1)}` to zero over the last `window`
/// records, anchored at the last record.
pub fn estimate_blowup_time(trace: &SolveTrace, p: f64, window: usize) -> Option<BlowupEstimate> {
    let recs = &trace.records;
    if recs.len() < 3 {
        return None;
    }
    let w = window.min(recs.len()).max(3);
    let tail = &recs[recs.len() - w..];
    let t: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let y: Vec<f64> = tail.iter().map(|r| r.sup_norm.powf(1.0 - p)).collect();
    let fit = fit_line(&t, &y).ok()?;
    if !(fit.slope < 0.0) {
        return None;
    }
    let last = tail.last().unwrap();
    Some(BlowupEstimate {
        t_star: last.t + y[w - 1] / (-fit.slope),
        method: "linear-extrapolation-of-sup-norm-power",
        residual: fit.rms_residual / y[0],
        last_time: last.t,
        window: w,
    })
}

/// `∫ ½u_x² - |u|^{p+1}/(p+1)` with one-sided differences at half nodes.
pub fn energy_e(u: &Field, p: f64) -> f64 {
    energy_slice(u.grid(), u.values(), p)
}

fn energy_slice(grid: &Grid, u: &[f64], p: f64) -> f64 {
    let h = grid.spacing();
    let grad: f64 = u.windows(2).map(|w| 0.5 * ((w[1] - w[0]) / h).powi(2) * h).sum();
    let pot: f64 = (0..u.len())
        .map(|i| grid.trapezoid_weight(i) * u[i].abs().powf(p + 1.0) / (p + 1.0))
        .sum();
    grad - pot
}

fn gaussian_functional(grid: &Grid, w: &[f64], p: f64, grad_coef: f64, mass_coef: f64, pot_coef: f64, var: f64) -> f64 {
    // ∫ (grad_coef ½w'² + mass_coef ½w² - pot_coef |w|^{p+1}/(p+1)) e^{-y²/(4 var)}
    let h = grid.spacing();
    let rho = |y: f64| (-y * y / (4.0 * var)).exp();
    let grad: f64 = (0..w.len() - 1)
        .map(|i| {
            let ym = grid.node(i) + 0.5 * h;
            0.5 * ((w[i + 1] - w[i]) / h).powi(2) * rho(ym) * h
        })
        .sum();
    let rest: f64 = (0..w.len())
        .map(|i| {
            let y = grid.node(i);
            grid.trapezoid_weight(i)
                * rho(y)
                * (mass_coef * 0.5 * w[i] * w[i] - pot_coef * w[i].abs().powf(p + 1.0) / (p + 1.0))
        })
        .sum();
    grad_coef * grad + rest
}

/// `S(w) = ½∫(w_y² + w²/(p-1) - 2|w|^{p+1}/(p+1)) e^{-y²/4}`.
pub fn lyapunov_s(w: &Field, p: f64) -> f64 {
    gaussian_functional(w.grid(), w.values(), p, 1.0, 1.0 / (p - 1.0), 1.0, 1.0)
}

/// `I(w) = ½∫ w² e^{-y²/4}`.
pub fn weighted_i(w: &Field) -> f64 {
    gaussian_functional(w.grid(), w.values(), 3.0, 0.0, 1.0, 0.0, 1.0)
}

/// The scaled energy `S_T(u0)`, equal to `S(w0)` for
/// `w0(y) = T^{1/(p-1)} u0(√T y)`. The Gaussian weight is `e^{-x²/(4T)}`,
/// the image of `e^{-y²/4}` under that change of variables.
pub fn scaled_energy_s_t(u0: &Field, p: f64, t_cap: f64) -> Result<f64> {
    ensure_exponent(p)?;
    ensure_positive("T", t_cap)?;
    let e1 = (p + 3.0) / (2.0 * (p - 1.0));
    let e2 = -(p - 5.0) / (2.0 * (p - 1.0));
    let grid = u0.grid();
    let w = u0.values();
    let main = gaussian_functional(grid, w, p, 1.0, 0.0, 1.0, t_cap);
    let mass = gaussian_functional(grid, w, p, 0.0, 1.0, 0.0, t_cap);
    Ok(t_cap.powf(e1) * main + t_cap.powf(e2) * mass / (p - 1.0))
}

/// Split stepper for the similarity-frame equation
/// `v_τ = v_yy - a y v_y - 2a/(p-1) v + |v|^{p-1} v`.
/// With `a = 1/2` this is the flow on which `S` is a Lyapunov functional.
#[derive(Debug, Clone)]
pub struct SimilarityStepper {
    grid: Grid,
    p: f64,
    cached: Option<(f64, LinearPart)>,
}

impl SimilarityStepper {
    pub fn new(grid: Grid, p: f64) -> Self {
        Self { grid, p, cached: None }
    }

    pub fn step(&mut self, v: &[f64], a: f64, dtau: f64) -> Result<Vec<f64>> {
        let rebuild = !matches!(self.cached, Some((ca, _)) if ca == a);
        if rebuild {
            self.cached = Some((a, LinearPart::similarity(&self.grid, a, self.p)));
        }
        let lin = &self.cached.as_ref().unwrap().1;
        lin.strang_step(v, dtau, self.p)
    }

    pub fn step_field(&mut self, v: &Field, a: f64, dtau: f64) -> Result<Field> {
        let out = self.step(v.values(), a, dtau)?;
        Ok(Field::from_raw(self.grid, out, v.parity()))
    }
}

/// Homogeneous solution `[u0^{1-p} - (p-1)t]^{-1/(p-1)}`.
pub fn homogeneous_solution(u0: f64, t: f64, p: f64) -> Option<f64> {
    reaction_flow(u0, t, p)
}

/// Blowup time `1/((p-1) u0^{p-1})` of the homogeneous solution.
pub fn homogeneous_blowup_time(u0: f64, p: f64) -> f64 {
    1.0 / ((p - 1.0) * u0.powf(p - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Parity;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid, amp: f64, width: f64) -> Field {
        Field::from_fn(grid, Parity::Even, |x| amp * (-x * x / (width * width)).exp())
    }

    #[test]
    fn semigroup_identity_and_constant() {
        let g = Grid::new(20.0, 801).unwrap();
        let f = gaussian(g, 1.0, 2.0);
        assert_eq!(heat_semigroup_apply(&f, 0.0).unwrap(), f);
        assert!(heat_semigroup_apply(&f, -1.0).is_err());
        let one = Field::from_fn(g, Parity::Even, |_| 1.0);
        let s = heat_semigroup_apply(&one, 0.5).unwrap();
        for i in 200..=600 {
            assert!((s.values()[i] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn semigroup_spreads_gaussian_variance() {
        let g = Grid::new(30.0, 3001).unwrap();
        let var0: f64 = 1.5;
        let norm = |v: f64| move |x: f64| (-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        let f = Field::from_fn(g, Parity::Even, norm(var0));
        let t = 0.7;
        let s = heat_semigroup_apply(&f, t).unwrap();
        let exact = Field::from_fn(g, Parity::Even, norm(var0 + 2.0 * t));
        assert!(s.sub(&exact).unwrap().sup_norm() < 1e-6);
        let m0: f64 = f.values().iter().sum::<f64>() * g.spacing();
        let m1: f64 = s.values().iter().sum::<f64>() * g.spacing();
        assert!((m0 - m1).abs() < 1e-8);
    }

    #[test]
    fn local_time_formula() {
        assert!((local_time(3.0, 1.0) - 1.0 / 432.0).abs() < 1e-16);
        assert!((local_bound(3.0, 1.0) - 3.0 * 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn duhamel_zero_data() {
        let g = Grid::new(10.0, 201).unwrap();
        let sol = duhamel_solve(3.0, &Field::zeros(g), 0.01, 4).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.trajectory.iter().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn reaction_flow_matches_homogeneous_solution() {
        let u = reaction_flow(1.0, 0.25, 3.0).unwrap();
        assert!((u - 2f64.sqrt()).abs() < 1e-15);
        assert!(reaction_flow(1.0, 0.5, 3.0).is_none());
        assert_eq!(reaction_flow(0.0, 10.0, 3.0), Some(0.0));
        let neg = reaction_flow(-1.0, 0.25, 3.0).unwrap();
        assert!((neg + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_data_step_is_exact_in_the_interior() {
        let g = Grid::new(20.0, 401).unwrap();
        let u = Field::from_fn(g, Parity::Even, |_| 1.0);
        let dt = 0.01;
        let v = step_imex(&u, dt, 3.0).unwrap();
        let exact = homogeneous_solution(1.0, dt, 3.0).unwrap();
        assert!((v.at_center() - exact).abs() < 1e-13);
        let zero = step_imex(&Field::zeros(g), dt, 3.0).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn energy_of_cosine_bump_matches_closed_form() {
        // u = A cos²x on |x| ≤ π/2: ∫u_x² = A²π/2, ∫u⁴ = A⁴ 35π/128.
        let amp: f64 = 0.8;
        let half = 2.0 * PI;
        let g = Grid::new(half, 4 * 24000 + 1).unwrap();
        let u = Field::from_fn(g, Parity::Even, |x| if x.abs() <= PI / 2.0 { amp * x.cos().powi(2) } else { 0.0 });
        let exact = 0.5 * amp * amp * PI / 2.0 - 0.25 * amp.powi(4) * 35.0 * PI / 128.0;
        assert!((energy_e(&u, 3.0) - exact).abs() < 1e-8);
        assert_eq!(energy_e(&Field::zeros(g), 3.0), 0.0);
    }

    #[test]
    fn constant_profile_is_critical_for_s() {
        let g = Grid::new(20.0, 801).unwrap();
        let p: f64 = 3.0;
        let kappa = (1.0 / (p - 1.0)).powf(1.0 / (p - 1.0));
        let w = Field::from_fn(g, Parity::Even, |_| kappa);
        // Directional derivatives of S at κ along smooth localized directions.
        for dir in [|y: f64| (-y * y / 4.0).exp(), |y: f64| (y * y - 2.0) * (-y * y / 8.0).exp()] {
            let d = Field::from_fn(g, Parity::Even, dir);
            let eps = 1e-4;
            let plus = lyapunov_s(&w.axpy(eps, &d).unwrap(), p);
            let minus = lyapunov_s(&w.axpy(-eps, &d).unwrap(), p);
            assert!(((plus - minus) / (2.0 * eps)).abs() < 1e-6);
        }
        assert_eq!(lyapunov_s(&Field::zeros(g), p), 0.0);
        assert_eq!(weighted_i(&Field::zeros(g)), 0.0);
    }

    #[test]
    fn scaled_energy_equals_rescaled_s() {
        let p = 3.0;
        let t_cap: f64 = 0.3;
        let gx = Grid::new(12.0, 2401).unwrap();
        let u0 = gaussian(gx, 2.0, 1.3);
        let st = scaled_energy_s_t(&u0, p, t_cap).unwrap();
        let gy = Grid::new(12.0 / t_cap.sqrt(), 2401).unwrap();
        let w0 = Field::from_fn(gy, Parity::Even, |y| {
            t_cap.powf(1.0 / (p - 1.0)) * 2.0 * (-(t_cap.sqrt() * y).powi(2) / 1.69).exp()
        });
        assert!((lyapunov_s(&w0, p) - st).abs() < 1e-8 * st.abs().max(1.0));
        assert_eq!(scaled_energy_s_t(&Field::zeros(gx), p, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn homogeneous_blowup_time_estimate() {
        let g = Grid::new(20.0, 2001).unwrap();
        let u0 = Field::from_fn(g, Parity::Even, |_| 1.0);
        let run = solve_to_blowup(&Problem::new(3.0, u0, 2.0)).unwrap();
        assert_eq!(run.trace.termination, Termination::BlowupDetected);
        let est = run.estimate.unwrap();
        assert!((est.t_star - 0.5).abs() < 1e-6, "{}", est.t_star);
        assert!(est.t_star > est.last_time);
    }

    #[test]
    fn small_bump_reaches_horizon() {
        let g = Grid::new(20.0, 801).unwrap();
        let u0 = gaussian(g, 0.2, 1.0);
        let run = solve_to_blowup(&Problem::new(3.0, u0, 1.0)).unwrap();
        assert_eq!(run.trace.termination, Termination::HorizonReached);
        assert!(run.estimate.is_none());
        assert!(run.trace.to_csv().starts_with("t,sup_norm,dt,energy_E,lyapunov_S\n"));
    }
}
