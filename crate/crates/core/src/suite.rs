//! Acceptance checks. Each criterion is a plain function returning a
//! [`CheckResult`]; [`verify_suite`] selects them by tag and aggregates.
//! Tolerances are pinned in the `tol` module and echoed in every result.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{ExperimentConfig, Scenario};
use crate::decomposition::{solve_g, MajorantSeries};
use crate::dynamics::{integrate_truncated, jacobian_at_equilibrium, truncated_rhs, Gauge, TruncatedState};
use crate::error::{Error, Result};
use crate::feynman_kac::{
    decay_test_functions, fk_weights, kernel_fidelity, propagator_decay, square_stencil, BetaSchedule, DecaySettings,
    McSettings, MehlerKernel, OracleSettings,
};
use crate::grid::{weighted_sup_norm, Field, Grid, Parity, WeightSpec};
use crate::heat::{
    duhamel_local_solve, local_bound, lyapunov_s, scaled_energy_s_t, solve_to_blowup, step_imex, Problem,
    SimilarityStepper, Termination,
};
use crate::pipeline::{run_pipeline, PipelineSummary, RunReport};
use crate::spectral::{
    check_eigen_bounds, extrapolated_eigenvalues, profile, OperatorKind, ProfileKind, ProfileParams,
};

/// Pinned tolerances.
pub mod tol {
    pub const HOMOGENEOUS_REL: f64 = 0.01;
    pub const LOCAL_SUP: f64 = 1e-4;
    pub const SPLIT_EXACT: f64 = 1e-12;
    pub const SPLIT_SPREAD: f64 = 2.0;
    pub const EIGEN_SLACK: f64 = 1e-5;
    pub const B_SLOPE_REL: f64 = 0.15;
    pub const TRUNCATED_SLOPE_REL: f64 = 0.01;
    pub const LIMIT_FACTOR: f64 = 10.0;
    /// `|a - 1/2|` and `|c - 1/2|` at the end of the run, in units of `β(τ_end)`.
    pub const LIMIT_END_FACTOR: f64 = 2.0;
    pub const MAJORANT_FACTOR: f64 = 10.0;
    pub const M2_MAX: f64 = 0.1;
    pub const ENERGY_STEP: f64 = 1e-8;
    pub const FK_SIGMAS: f64 = 3.0;
    pub const DECAY_MARGIN: f64 = 0.1;
    pub const JACOBIAN: f64 = 1e-10;
    pub const SOLVER_SCALING: f64 = 1e-4;
    pub const TRUNCATED_SCALING: f64 = 1e-8;
}

/// Criterion tags in numbering order.
pub const ALL_TAGS: [&str; 13] = [
    "homogeneous",
    "local",
    "splitting",
    "spectral",
    "b-law",
    "limits",
    "majorants",
    "energy",
    "criterion",
    "fk",
    "decay",
    "equilibrium",
    "scaling",
];

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub tag: String,
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub tolerance: BTreeMap<String, f64>,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u8, name: &str) -> Self {
        Self {
            id,
            tag: ALL_TAGS[id as usize - 1].to_string(),
            name: name.to_string(),
            passed: true,
            measured: BTreeMap::new(),
            tolerance: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn measure(&mut self, key: &str, value: f64) -> &mut Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    fn tol(&mut self, key: &str, value: f64) -> &mut Self {
        self.tolerance.insert(key.to_string(), value);
        self
    }

    fn require(&mut self, ok: bool, what: &str) {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what);
        }
    }

    fn failed(mut self, e: &Error) -> Self {
        self.require(false, &format!("error: {e}"));
        self
    }

    /// One line `[PASS] 5 b-law: name (key=value ...)`.
    pub fn line(&self) -> String {
        let vals: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        let mut s = format!(
            "[{}] {:>2} {}: {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.tag,
            self.name,
            vals.join(" ")
        );
        if !self.detail.is_empty() {
            s.push_str(" -- ");
            s.push_str(&self.detail);
        }
        s
    }
}

/// Aggregated result. Contains no timings, so identical inputs give
/// identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }
}

/// Runs the criteria named by `tags` (or all of them for `"all"`). An empty
/// selection yields an empty, passing report.
pub fn verify_suite(tags: &[String], cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let mut ids = Vec::new();
    for t in tags {
        if t == "all" {
            ids.extend(1..=13u8);
            continue;
        }
        let pos = ALL_TAGS
            .iter()
            .position(|x| x == t)
            .ok_or_else(|| Error::Config(format!("unknown suite tag {t:?}")))?;
        ids.push(pos as u8 + 1);
    }
    ids.sort_unstable();
    ids.dedup();
    let needs_run = ids.iter().any(|i| (5..=7).contains(i));
    let run = needs_run.then(|| run_pipeline(cfg));
    let sweep = if ids.contains(&7) { majorant_sweep(cfg) } else { Vec::new() };
    let checks: Vec<CheckResult> = ids
        .iter()
        .map(|&id| match id {
            1 => check_homogeneous(),
            2 => check_local(),
            3 => check_splitting(),
            4 => check_spectral(),
            5 => check_b_law(run.as_ref().unwrap()),
            6 => check_limits(run.as_ref().unwrap()),
            7 => check_majorants(run.as_ref().unwrap(), &sweep),
            8 => check_energy(),
            9 => check_criterion(),
            10 => check_fk(cfg),
            11 => check_decay(),
            12 => check_equilibrium(),
            _ => check_scaling(),
        })
        .collect();
    Ok(SuiteReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Criterion 1: `p = 3`, `u0 ≡ 1` on `[-20, 20]` with 2001 nodes.
pub fn check_homogeneous() -> CheckResult {
    let mut r = CheckResult::new(1, "homogeneous blowup time");
    let cfg = ExperimentConfig {
        scenario: Scenario::Homogeneous,
        p: 3.0,
        homogeneous_u0: 1.0,
        phys_half_width: 20.0,
        phys_nodes: 2001,
        ..ExperimentConfig::default()
    };
    let report = run_pipeline(&cfg);
    let Some(h) = report.homogeneous else {
        r.require(false, &report.errors.join("; "));
        return r;
    };
    let est = h.estimate.map_or(f64::NAN, |e| e.t_star);
    let rel = h.relative_error.unwrap_or(f64::INFINITY);
    r.measure("t_star", est).measure("t_star_exact", h.t_star_exact).measure("rel_error", rel);
    r.tol("rel_error", tol::HOMOGENEOUS_REL);
    r.require(rel <= tol::HOMOGENEOUS_REL, "blowup time off by more than 1%");
    r
}

/// Criterion 2: Duhamel fixed point against the split stepper on the local
/// slab, for `u0 = e^{-x²}`, `p = 3`.
pub fn check_local() -> CheckResult {
    let r = CheckResult::new(2, "local solver agreement");
    local_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn local_inner(mut r: CheckResult) -> Result<CheckResult> {
    let p = 3.0;
    let grid = Grid::new(20.0, 2001)?;
    let u0 = Field::from_fn(grid, Parity::Even, |x| (-x * x).exp());
    let duh = duhamel_local_solve(&Problem::new(p, u0.clone(), 1.0))?;
    let steps = 256;
    let dt = duh.slab / steps as f64;
    let mut u = u0.clone();
    for _ in 0..steps {
        u = step_imex(&u, dt, p)?;
    }
    let diff = u.sub(duh.trajectory.last().unwrap())?.sup_norm();
    r.measure("slab", duh.slab)
        .measure("sup_diff", diff)
        .measure("max_sup", duh.max_sup)
        .measure("bound", duh.bound);
    r.tol("sup_diff", tol::LOCAL_SUP).tol("bound", local_bound(p, 1.0));
    r.require(diff <= tol::LOCAL_SUP, "Duhamel and split solutions disagree");
    r.require(duh.bound_holds(), "a priori bound violated");
    Ok(r)
}

/// Criterion 3: exact recovery of `(a0, b0)` and the `b0²` scaling of the
/// splitting under perturbations `b0² ψ`.
pub fn check_splitting() -> CheckResult {
    let r = CheckResult::new(3, "splitting exactness and stability");
    splitting_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

/// Perturbation direction used for the `b0²` scaling sweep.
pub fn splitting_direction(y: f64) -> f64 {
    (1.0 + 0.5 * y * y) * (-y * y / 16.0).exp()
}

fn splitting_inner(mut r: CheckResult) -> Result<CheckResult> {
    let p = 3.0;
    let grid = Grid::new(40.0, 4001)?;
    let (a0, b0) = (0.5, 0.05);
    let exact = profile(ProfileKind::Ungauged, &ProfileParams::new(a0, b0)?, p, &grid)?;
    let s = solve_g(&exact, (0.45, 0.07), p)?;
    let err = (s.params.a - a0).abs().max((s.params.b - b0).abs());
    r.measure("exact_error", err);
    r.tol("exact_error", tol::SPLIT_EXACT);
    r.require(err <= tol::SPLIT_EXACT, "g(V) differs from its parameters");

    let psi = Field::from_fn(grid, Parity::Even, splitting_direction);
    let w3 = WeightSpec::new(3, 0.0)?;
    let mut consts = Vec::new();
    for b in [0.1, 0.05, 0.025] {
        let base = profile(ProfileKind::Ungauged, &ProfileParams::new(a0, b)?, p, &grid)?;
        let v = base.axpy(b * b, &psi)?.with_parity(Parity::Even);
        let s = solve_g(&v, (a0, b), p)?;
        let shift = (s.params.a - a0).abs().max((s.params.b - b).abs());
        let fitted = profile(ProfileKind::Ungauged, &s.params, p, &grid)?;
        let rest = weighted_sup_norm(&v.sub(&fitted)?, &w3)?;
        let c = shift.max(rest) / (b * b);
        r.measure(&format!("C_prime_b{b}"), c);
        consts.push(c);
    }
    let (lo, hi) = consts.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
    let spread = hi / lo;
    r.measure("spread", spread);
    r.tol("spread", tol::SPLIT_SPREAD);
    r.require(spread < tol::SPLIT_SPREAD, "no single constant covers the b0 sweep");
    Ok(r)
}

/// Criterion 4: eigenvalue sandwich on a 5x5x5 `(a, c, b)` grid and the
/// oscillator spectrum `{n a}`.
pub fn check_spectral() -> CheckResult {
    let r = CheckResult::new(4, "spectral sandwich");
    spectral_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn spectral_inner(mut r: CheckResult) -> Result<CheckResult> {
    let p = 3.0;
    let k = 8;
    let grid = Grid::new(20.0, 2001)?;
    let ac: Vec<f64> = (0..5).map(|i| 0.25 + 0.1875 * i as f64).collect();
    let bs: Vec<f64> = (0..5).map(|i| 0.05 * i as f64).collect();
    let mut margin = f64::INFINITY;
    let mut failures = 0usize;
    for &a in &ac {
        for &c in &ac {
            for &b in &bs {
                let params = ProfileParams::free(a, b, c);
                let spec = extrapolated_eigenvalues(OperatorKind::Linearized { params, a_tau: 0.0, p }, &grid, k)?;
                let rep = check_eigen_bounds(p, &params, &spec.extrapolated, tol::EIGEN_SLACK)?;
                margin = margin.min(rep.min_margin());
                failures += rep.violations().len();
            }
        }
    }
    let mut osc = 0.0f64;
    for &a in &ac {
        let spec = extrapolated_eigenvalues(OperatorKind::HarmonicOscillator { a }, &grid, k)?;
        for (n, l) in spec.extrapolated.iter().enumerate() {
            osc = osc.max((l - n as f64 * a).abs());
        }
    }
    r.measure("min_margin", margin)
        .measure("violations", failures as f64)
        .measure("oscillator_error", osc);
    r.tol("slack", tol::EIGEN_SLACK).tol("oscillator_error", tol::EIGEN_SLACK);
    r.require(failures == 0, "eigenvalue bounds violated");
    r.require(osc <= tol::EIGEN_SLACK, "oscillator spectrum off");
    Ok(r)
}

fn pipeline_of(run: &RunReport) -> std::result::Result<&PipelineSummary, String> {
    run.pipeline.as_ref().ok_or_else(|| {
        if run.errors.is_empty() {
            "pipeline produced no summary".to_string()
        } else {
            run.errors.join("; ")
        }
    })
}

/// Criterion 5: slope of `1/b` on `τ ∈ [5, 50]` and the truncated control.
pub fn check_b_law(run: &RunReport) -> CheckResult {
    let mut r = CheckResult::new(5, "b-law slope");
    let s = match pipeline_of(run) {
        Ok(s) => s,
        Err(e) => {
            r.require(false, &e);
            return r;
        }
    };
    r.tol("slope_rel", tol::B_SLOPE_REL).tol("truncated_rel", tol::TRUNCATED_SLOPE_REL);
    match &s.b_slope {
        Some(f) => {
            r.measure("slope", f.fitted).measure("target", f.target).measure("slope_rel", f.relative_error);
            r.require(f.within(tol::B_SLOPE_REL), "pipeline slope outside 15%");
        }
        None => r.require(false, "no pipeline slope"),
    }
    match &s.truncated_slope {
        Some(f) => {
            r.measure("truncated_slope", f.fitted).measure("truncated_rel", f.relative_error);
            r.require(f.within(tol::TRUNCATED_SLOPE_REL), "truncated slope outside 1%");
        }
        None => r.require(false, "no truncated slope"),
    }
    r.require(s.all_accepted, "splitting rejected at some sample");
    r
}

/// Criterion 6: `|a - 1/2 + 2b/(p-1)| ≤ 10 β²` at every sample and
/// `a, c` within `2 β(τ_end)` of `1/2` at the end.
pub fn check_limits(run: &RunReport) -> CheckResult {
    let mut r = CheckResult::new(6, "parameter limits");
    let s = match pipeline_of(run) {
        Ok(s) => s,
        Err(e) => {
            r.require(false, &e);
            return r;
        }
    };
    let p = run.config.p;
    let worst = s
        .samples
        .iter()
        .map(|x| {
            let beta = s.law.beta(x.tau);
            (x.record.a - 0.5 + 2.0 * x.record.b / (p - 1.0)).abs() / (beta * beta)
        })
        .fold(0.0f64, f64::max);
    let last = s.samples.last().expect("non-empty run");
    let beta_end = s.law.beta(last.tau);
    let da = (last.record.a - 0.5).abs() / beta_end;
    let dc = (last.record.c - 0.5).abs() / beta_end;
    r.measure("max_ratio", worst)
        .measure("a_end", last.record.a)
        .measure("c_end", last.record.c)
        .measure("a_dist_over_beta", da)
        .measure("c_dist_over_beta", dc);
    r.tol("max_ratio", tol::LIMIT_FACTOR).tol("end_over_beta", tol::LIMIT_END_FACTOR);
    r.require(worst <= tol::LIMIT_FACTOR, "a - 1/2 + 2b/(p-1) exceeds 10 beta^2");
    r.require(da <= tol::LIMIT_END_FACTOR && dc <= tol::LIMIT_END_FACTOR, "a or c not near 1/2");
    r
}

/// The `δ₃ = C b0²` constant is unspecified; criterion 7 is repeated at
/// these multiples of the default.
pub const DELTA_C_SWEEP: [f64; 2] = [0.5, 2.0];

pub fn majorant_sweep(cfg: &ExperimentConfig) -> Vec<RunReport> {
    DELTA_C_SWEEP
        .iter()
        .map(|&dc| run_pipeline(&ExperimentConfig { delta_c: dc, ..cfg.clone() }))
        .collect()
}

/// Initial scale `max(M(τ = 1), 1)` and the run maximum of `M`.
fn growth(series: &[f64], taus: &[f64]) -> (f64, f64) {
    let start = MajorantSeries::value_at(series, taus, 1.0).max(1.0);
    let top = series.iter().copied().fold(0.0f64, f64::max);
    (start, top)
}

/// Criterion 7: `M1, A, B` below ten times their initial scale and
/// `M2 < 0.1` at every cutoff constant, for the main run and the sweep.
pub fn check_majorants(run: &RunReport, sweep: &[RunReport]) -> CheckResult {
    let mut r = CheckResult::new(7, "majorant boundedness");
    r.tol("growth", tol::MAJORANT_FACTOR).tol("M2", tol::M2_MAX);
    for (label, rep) in std::iter::once(("main", run)).chain(sweep.iter().map(|x| ("sweep", x))) {
        let tag = if label == "main" { String::new() } else { format!("_dc{}", rep.config.delta_c) };
        let s = match pipeline_of(rep) {
            Ok(s) => s,
            Err(e) => {
                r.require(false, &format!("{label}{tag}: {e}"));
                continue;
            }
        };
        let m = &s.majorants;
        for (name, series) in [("M1", &m.m1), ("A", &m.a_maj), ("B", &m.b_maj)] {
            let (start, top) = growth(series, &m.tau);
            r.measure(&format!("{name}_growth{tag}"), top / start);
            r.require(top < tol::MAJORANT_FACTOR * start, &format!("{name}{tag} grew tenfold"));
        }
        for c in &m.m2 {
            let top = c.m2.iter().copied().fold(0.0f64, f64::max);
            r.measure(&format!("M2_CD{}{tag}", c.c_d), top);
            r.measure(&format!("M2_coverage_CD{}{tag}", c.c_d), c.coverage());
            r.require(top < tol::M2_MAX, &format!("M2{tag} at C_D = {} too large", c.c_d));
        }
    }
    r
}

/// Largest single-step increase of a sequence.
fn worst_increase(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Criterion 8: `S` along the `a = 1/2` similarity flow and `𝓔` along the
/// physical solver, for decaying and blowing-up data.
pub fn check_energy() -> CheckResult {
    let r = CheckResult::new(8, "energy monotonicity");
    energy_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn energy_inner(mut r: CheckResult) -> Result<CheckResult> {
    let p = 3.0;
    let y_grid = Grid::new(30.0, 3001)?;
    let mut worst_s = f64::NEG_INFINITY;
    for (label, amp) in [("small", 0.5), ("large", 1.2)] {
        let w0 = Field::from_fn(y_grid, Parity::Even, |y| amp * (1.0 + 0.3 * y.cos()) * (-y * y / 8.0).exp());
        let mut stepper = SimilarityStepper::new(y_grid, p);
        let mut w = w0;
        let mut s = vec![lyapunov_s(&w, p)];
        for _ in 0..500 {
            w = match stepper.step_field(&w, 0.5, 0.01) {
                Ok(x) => x,
                Err(Error::NonFinite(_)) => break,
                Err(e) => return Err(e),
            };
            if w.sup_norm() > 1e3 {
                break;
            }
            s.push(lyapunov_s(&w, p));
        }
        let inc = worst_increase(&s);
        r.measure(&format!("S_step_increase_{label}"), inc);
        worst_s = worst_s.max(inc);
    }
    let x_grid = Grid::new(20.0, 2001)?;
    let mut worst_e = f64::NEG_INFINITY;
    for (label, amp) in [("small", 0.5), ("large", 3.0)] {
        let u0 = Field::from_fn(x_grid, Parity::Even, |x| amp * (-x * x).exp());
        let run = solve_to_blowup(&Problem::new(p, u0, 1.0))?;
        let e: Vec<f64> = run.trace.records.iter().map(|x| x.energy_e).collect();
        let inc = worst_increase(&e);
        r.measure(&format!("E_step_increase_{label}"), inc);
        worst_e = worst_e.max(inc);
    }
    r.tol("step_increase", tol::ENERGY_STEP);
    r.require(worst_s <= tol::ENERGY_STEP, "S increased along the flow");
    r.require(worst_e <= tol::ENERGY_STEP, "E increased along the flow");
    Ok(r)
}

/// Gaussian data `amp e^{-x²/w²}` with exponent `p` and the time `T` used in
/// `S_T`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriterionCase {
    pub p: f64,
    pub amp: f64,
    pub width: f64,
    pub t_cap: f64,
}

pub const CRITERION_CASES: [CriterionCase; 5] = [
    CriterionCase { p: 3.0, amp: 5.0, width: 1.0, t_cap: 0.5 },
    CriterionCase { p: 3.0, amp: 3.0, width: 2.0, t_cap: 0.5 },
    CriterionCase { p: 3.0, amp: 10.0, width: 0.5, t_cap: 0.1 },
    CriterionCase { p: 2.0, amp: 5.0, width: 1.0, t_cap: 0.5 },
    CriterionCase { p: 5.0, amp: 3.0, width: 1.0, t_cap: 0.5 },
];

/// Criterion 9: data with `S_T(u0) < 0` blows up no later than `T`.
pub fn check_criterion() -> CheckResult {
    let r = CheckResult::new(9, "blowup criterion");
    criterion_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn criterion_inner(mut r: CheckResult) -> Result<CheckResult> {
    let grid = Grid::new(20.0, 2001)?;
    for (i, c) in CRITERION_CASES.iter().enumerate() {
        let u0 = Field::from_fn(grid, Parity::Even, |x| c.amp * (-(x / c.width).powi(2)).exp());
        let s_t = scaled_energy_s_t(&u0, c.p, c.t_cap)?;
        let run = solve_to_blowup(&Problem::new(c.p, u0, 2.0 * c.t_cap))?;
        let t_star = match (run.trace.termination, run.estimate) {
            (Termination::HorizonReached, _) | (_, None) => f64::INFINITY,
            (_, Some(e)) => e.t_star,
        };
        r.measure(&format!("case{i}_S_T"), s_t).measure(&format!("case{i}_t_star"), t_star);
        r.require(s_t < 0.0, &format!("case {i} does not satisfy S_T < 0"));
        r.require(t_star <= c.t_cap, &format!("case {i} did not blow up by T"));
    }
    Ok(r)
}

/// Criterion 10: Monte Carlo kernel against the direct propagator on a 5x5
/// stencil, and the trivial potential.
pub fn check_fk(cfg: &ExperimentConfig) -> CheckResult {
    let r = CheckResult::new(10, "Feynman-Kac fidelity");
    fk_inner(r.clone(), cfg).unwrap_or_else(|e| r.failed(&e))
}

fn fk_inner(mut r: CheckResult, cfg: &ExperimentConfig) -> Result<CheckResult> {
    let (alpha, beta, p, window) = (0.5, 0.05, 3.0, 1.0);
    let settings = McSettings {
        n_paths: cfg.fk_paths,
        n_steps: cfg.fk_steps,
        seed: cfg.seed,
    };
    let mehler = MehlerKernel::calibrate(alpha, window)?;
    let rep = kernel_fidelity(alpha, beta, p, window, &square_stencil(1.0), &mehler, &settings, &OracleSettings::default())?;
    let zero = |_: f64, _: f64| 0.0;
    let trivial = fk_weights(&zero, alpha, 0.0, window, &[(0.3, -0.7)], &McSettings { n_paths: 1000, ..settings })?;
    let t = trivial[0];
    r.measure("max_z", rep.max_z())
        .measure("rejected", rep.rejected as f64)
        .measure("paths", settings.n_paths as f64)
        .measure("trivial_mean", t.mean)
        .measure("trivial_se", t.std_error);
    r.tol("max_z", tol::FK_SIGMAS);
    r.require(rep.within(tol::FK_SIGMAS), "kernel outside 3 standard errors");
    r.require(t.mean == 1.0 && t.std_error == 0.0, "zero potential did not give exactly 1");
    Ok(r)
}

/// Criterion 11: decay exponent of projected data under the slowly
/// decreasing `β` law at `α = 1/2`.
pub fn check_decay() -> CheckResult {
    let r = CheckResult::new(11, "propagator decay");
    decay_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn decay_inner(mut r: CheckResult) -> Result<CheckResult> {
    let settings = DecaySettings::default();
    let law = crate::dynamics::BetaLaw::new(0.05, settings.p)?;
    let schedule = BetaSchedule::Law { law };
    let floor = settings.alpha - tol::DECAY_MARGIN;
    let mut worst = f64::INFINITY;
    for (label, g) in decay_test_functions(&settings)? {
        let rep = propagator_decay(&label, &g, &schedule, &settings)?;
        r.measure(&format!("exponent_{label}"), rep.exponent);
        worst = worst.min(rep.exponent);
    }
    r.tol("exponent_min", floor);
    r.require(worst >= floor, "decay slower than alpha - 0.1");
    Ok(r)
}

/// Eigenvalues of a real 2x2 matrix with real spectrum, ascending.
fn eig2(m: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    [0.5 * tr - disc, 0.5 * tr + disc]
}

/// Criterion 12: analytic and finite-difference Jacobians at `(0, 1/2)`.
pub fn check_equilibrium() -> CheckResult {
    let r = CheckResult::new(12, "equilibrium stability");
    equilibrium_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn equilibrium_inner(mut r: CheckResult) -> Result<CheckResult> {
    let p = 3.0;
    // The right-hand side is quadratic, so central differences are exact up
    // to rounding for any step.
    let h = 1e-2;
    let mut worst = 0.0f64;
    for l in [1.5, 2.0, 3.0] {
        let lin = jacobian_at_equilibrium(l, p)?;
        let g = Gauge::standard(l);
        let f = |b: f64, c: f64| truncated_rhs(0.0, b, c, g, p, None);
        let (bp, bm) = (f(h, 0.5), f(-h, 0.5));
        let (cp, cm) = (f(0.0, 0.5 + h), f(0.0, 0.5 - h));
        let fd = [
            [(bp.0 - bm.0) / (2.0 * h), (cp.0 - cm.0) / (2.0 * h)],
            [(bp.1 - bm.1) / (2.0 * h), (cp.1 - cm.1) / (2.0 * h)],
        ];
        let expected = [1.0 - l, 0.0];
        let mut analytic = lin.eigenvalues;
        analytic.sort_by(f64::total_cmp);
        let numeric = eig2(fd);
        for k in 0..2 {
            worst = worst.max((analytic[k] - expected[k]).abs()).max((numeric[k] - expected[k]).abs());
        }
        r.measure(&format!("l{l}_max_eigenvalue"), numeric[1]);
        r.require(numeric[1] <= tol::JACOBIAN && analytic[1] <= 0.0, &format!("positive eigenvalue at l = {l}"));
    }
    r.measure("eigenvalue_error", worst);
    r.tol("eigenvalue_error", tol::JACOBIAN);
    r.require(worst <= tol::JACOBIAN, "Jacobian eigenvalues off");
    Ok(r)
}

/// Criterion 13: `u ↦ λ^{2/(p-1)} u(λx, λ²t)` on matched grids and the
/// truncated-system symmetry `(b, c, k, τ) ↦ (μ²b, μ²c, μ²k, τ/μ²)`.
pub fn check_scaling() -> CheckResult {
    let r = CheckResult::new(13, "scaling equivariance");
    scaling_inner(r.clone()).unwrap_or_else(|e| r.failed(&e))
}

fn scaling_inner(mut r: CheckResult) -> Result<CheckResult> {
    let (p, lam) = (3.0, 2.0);
    let q = 2.0 / (p - 1.0);
    let n = 2001;
    let big = Grid::new(20.0, n)?;
    let small = Grid::new(20.0 / lam, n)?;
    let f = |x: f64| 0.8 * (-x * x / 2.0).exp() * (1.0 + 0.2 * x.sin());
    let mut u = Field::from_fn(big, Parity::None, f);
    let mut v = Field::from_fn(small, Parity::None, |x| lam.powf(q) * f(lam * x));
    let (dt, steps) = (1e-3, 100);
    for _ in 0..steps {
        u = step_imex(&u, dt, p)?;
        v = step_imex(&v, dt / (lam * lam), p)?;
    }
    let solver_err = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (lam.powf(q) * a - b).abs())
        .fold(0.0f64, f64::max);

    let mu: f64 = 2.0;
    let m2 = mu * mu;
    let g = Gauge::standard(2.0);
    let gs = Gauge { l: g.l, k: m2 * g.k };
    let tau_end = 10.0;
    let base = integrate_truncated(TruncatedState { tau: 0.0, b: 0.05, c: 0.45 }, g, p, tau_end, 1e-13, None)?.last();
    let scaled = integrate_truncated(
        TruncatedState { tau: 0.0, b: m2 * 0.05, c: m2 * 0.45 },
        gs,
        p,
        tau_end / m2,
        1e-13,
        None,
    )?
    .last();
    let ode_err = (m2 * base.b - scaled.b).abs().max((m2 * base.c - scaled.c).abs());
    r.measure("solver_error", solver_err).measure("truncated_error", ode_err);
    r.tol("solver_error", tol::SOLVER_SCALING).tol("truncated_error", tol::TRUNCATED_SCALING);
    r.require(solver_err <= tol::SOLVER_SCALING, "solver not scale equivariant");
    r.require(ode_err <= tol::TRUNCATED_SCALING, "truncated system not scale symmetric");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection_passes() {
        let rep = verify_suite(&[], &ExperimentConfig::default()).unwrap();
        assert!(rep.checks.is_empty() && rep.passed);
    }

    #[test]
    fn unknown_tag_is_an_error() {
        assert!(verify_suite(&["nope".into()], &ExperimentConfig::default()).is_err());
    }

    #[test]
    fn fast_criteria_pass() {
        for c in [check_equilibrium(), check_scaling(), check_splitting()] {
            assert!(c.passed, "{}", c.line());
        }
    }
}
