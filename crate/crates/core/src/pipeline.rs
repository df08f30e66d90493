//! End-to-end runs: initial data, evolution in similarity variables with the
//! splitting feeding `a(τ)` back into the frame, majorants, effective
//! equations and law fits. The homogeneous scenario runs the physical solver
//! instead.

use serde::{Deserialize, Serialize};

use crate::config::{make_initial_data, ExperimentConfig, InitialNorms, Scenario};
use crate::decomposition::{
    compute_gammas, compute_majorants, solve_g, DecompositionRecord, EffectiveRhs, MajorantSeries, ParamHistory,
    SplitResult,
};
use crate::dynamics::{
    fit_blowup_laws, fit_inverse_b_slope, fit_lambda_exponent, integrate_truncated, BetaLaw, FitReport, Gauge,
    LawFit, LawSamples, TruncatedState,
};
use crate::error::{Error, Result};
use crate::frames::BlowupFrame;
use crate::heat::{homogeneous_blowup_time, solve_to_blowup, BlowupEstimate, Problem, SimilarityStepper, SolveTrace};
use crate::numerics::CompensatedSum;

/// One accepted or rejected sample of the similarity-frame run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub tau: f64,
    pub t: f64,
    pub lambda: f64,
    /// `t* - t`, from the frame's suffix sums and the tail estimate.
    pub remaining: f64,
    /// `v(0, τ)`.
    pub v_center: f64,
    /// `‖v‖_∞ = λ^{-2/(p-1)} ‖u‖_∞`.
    pub v_sup: f64,
    pub record: DecompositionRecord,
}

/// Summary of the homogeneous scenario.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousSummary {
    pub t_star_exact: f64,
    pub estimate: Option<BlowupEstimate>,
    pub relative_error: Option<f64>,
    /// `λ ∝ ‖u‖_∞^{(p-1)/2}` against `t* - t`, target `-1/2`.
    pub lambda_fit: Option<LawFit>,
    pub trace: SolveTrace,
}

/// Summary of the similarity-frame pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub samples: Vec<FrameSample>,
    pub law: BetaLaw,
    pub majorants: MajorantSeries,
    pub effective: Option<EffectiveRhs>,
    pub fits: Option<FitReport>,
    /// `1/b` slope over the configured window.
    pub b_slope: Option<LawFit>,
    /// Truncated-system control run from the same `(b₀, c₀)`, slope over
    /// `τ ∈ [10, 100]`.
    pub truncated_slope: Option<LawFit>,
    /// `t*` from the frame: elapsed time plus `λ(τ_end)^{-2}/(2a)`.
    pub t_star: f64,
    /// `sup_τ ‖v‖_∞`, the constant in `‖u‖_∞ ≤ C λ^{2/(p-1)}`.
    pub sup_bound: f64,
    /// `min_τ (v(0) - (2c/(p-1))^{1/(p-1)}) / b²`.
    pub center_lower: f64,
    pub all_accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub initial_norms: Option<InitialNorms>,
    pub homogeneous: Option<HomogeneousSummary>,
    pub pipeline: Option<PipelineSummary>,
    pub errors: Vec<String>,
}

impl RunReport {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            scenario: cfg.scenario,
            config: cfg.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            initial_norms: None,
            homogeneous: None,
            pipeline: None,
            errors: Vec::new(),
        }
    }
}

/// Runs the configured scenario. Stage failures are recorded in
/// [`RunReport::errors`] and the partial report is returned.
pub fn run_pipeline(cfg: &ExperimentConfig) -> RunReport {
    let mut report = RunReport::new(cfg);
    if let Err(e) = cfg.validate() {
        report.errors.push(e.to_string());
        return report;
    }
    match cfg.scenario {
        Scenario::Homogeneous => match run_homogeneous(cfg) {
            Ok(h) => report.homogeneous = Some(h),
            Err(e) => report.errors.push(e.to_string()),
        },
        Scenario::ProfileFamily | Scenario::Custom => match run_similarity(cfg, &mut report.errors) {
            Ok((norms, summary)) => {
                report.initial_norms = norms;
                report.pipeline = summary;
            }
            Err(e) => report.errors.push(e.to_string()),
        },
    }
    report
}

fn run_homogeneous(cfg: &ExperimentConfig) -> Result<HomogeneousSummary> {
    let grid = cfg.physical_grid()?;
    let data = make_initial_data(cfg, &grid)?;
    let p = cfg.p;
    let exact = homogeneous_blowup_time(cfg.homogeneous_u0, p);
    let mut prob = Problem::new(p, data.field, 10.0 * exact);
    prob.cap = cfg.cap;
    prob.dt_max = cfg.dt_max;
    prob.c_safe = cfg.c_safe;
    let run = solve_to_blowup(&prob)?;
    let estimate = run.estimate;
    let relative_error = estimate.map(|e| (e.t_star - exact).abs() / exact);
    let lambda_fit = estimate.and_then(|e| {
        let recs = &run.trace.records;
        let (rem, lam): (Vec<f64>, Vec<f64>) = recs
            .iter()
            .filter(|r| e.t_star - r.t > 0.0)
            .map(|r| (e.t_star - r.t, r.sup_norm.powf(0.5 * (p - 1.0))))
            .unzip();
        // Drop the boundary transient and the final steps before the cap.
        let hi = 0.5 * exact;
        let lo = rem.iter().copied().fold(f64::INFINITY, f64::min) * 10.0;
        fit_lambda_exponent(&rem, &lam, (lo, hi)).ok()
    });
    Ok(HomogeneousSummary {
        t_star_exact: exact,
        estimate,
        relative_error,
        lambda_fit,
        trace: run.trace,
    })
}

fn split(v: &crate::grid::Field, guess: (f64, f64), p: f64) -> Result<SplitResult> {
    solve_g(v, guess, p)
}

fn run_similarity(cfg: &ExperimentConfig, errors: &mut Vec<String>) -> Result<(Option<InitialNorms>, Option<PipelineSummary>)> {
    let p = cfg.p;
    let grid = cfg.similarity_grid()?;
    let data = make_initial_data(cfg, &grid)?;
    let norms = data.norms;
    let mut v = data.field;
    let a_guess = 2.0 * data.c0 - 0.5;
    let first = split(&v, (a_guess, data.b0.max(1e-6)), p)?;
    let law = BetaLaw::new(first.params.b, p)?;
    let mut a_cur = first.params.a;
    let mut guess = (first.params.a, first.params.b);
    let mut frame = BlowupFrame::start(p, a_cur)?;
    let mut stepper = SimilarityStepper::new(grid, p);
    let steps = (cfg.tau_end / cfg.dtau).round() as usize;
    let mut pending: Vec<(usize, f64, f64, DecompositionRecord)> = Vec::new();
    let center = grid.center();
    let record = |tau: f64, s: &SplitResult| DecompositionRecord::from_split(tau, s, &cfg.cutoffs, law.beta(tau), cfg.eps0);
    pending.push((0, v.values()[center], v.sup_norm(), record(0.0, &first)?));
    let mut last_b = first.params.b;
    for k in 1..=steps {
        v = match stepper.step_field(&v, a_cur, cfg.dtau) {
            Ok(next) => next,
            Err(e) => {
                errors.push(format!("step {k}: {e}"));
                break;
            }
        };
        let tau = k as f64 * cfg.dtau;
        let every = last_b < 2.0 * law.b0 || k % cfg.cadence == 0;
        let mut a_next = a_cur;
        if every || k == steps {
            match split(&v, guess, p) {
                Ok(s) => {
                    a_next = s.params.a;
                    guess = (s.params.a, s.params.b);
                    last_b = s.params.b;
                    pending.push((k, v.values()[center], v.sup_norm(), record(tau, &s)?));
                }
                Err(e) => {
                    errors.push(format!("splitting at tau = {tau:.4}: {e}"));
                    frame.push_step(a_cur, cfg.dtau, a_cur);
                    break;
                }
            }
        }
        frame.push_step(a_cur, cfg.dtau, a_next);
        a_cur = a_next;
    }
    if pending.len() < 2 {
        return Ok((norms, None));
    }
    // Remaining time: suffix sums of the stored increments plus the tail
    // `∫_{τ_end}^∞ λ^{-2} dτ` with `a` frozen at its last value.
    let incs = frame.increments();
    let n = frame.len();
    let lam = frame.lambdas();
    let a_end = frame.a_samples()[n - 1];
    let tail = lam[n - 1].powi(-2) / (2.0 * a_end);
    let mut suffix = vec![0.0; n];
    let mut acc = CompensatedSum::default();
    acc.add(tail);
    suffix[n - 1] = acc.value();
    for i in (0..n - 1).rev() {
        acc.add(incs[i]);
        suffix[i] = acc.value();
    }
    let times = frame.times();
    let t_star = times[n - 1] + tail;
    let taus = frame.taus();
    let samples: Vec<FrameSample> = pending
        .into_iter()
        .map(|(k, vc, vs, rec)| FrameSample {
            tau: taus[k],
            t: times[k],
            lambda: lam[k],
            remaining: suffix[k],
            v_center: vc,
            v_sup: vs,
            record: rec,
        })
        .collect();
    let records: Vec<DecompositionRecord> = samples.iter().map(|s| s.record.clone()).collect();
    let majorants = compute_majorants(&records, &law, &cfg.cutoffs);
    let hist = ParamHistory::from_records(&records);
    let effective = compute_gammas(&hist, p, 5).map_err(|e| errors.push(format!("effective equations: {e}"))).ok();
    let law_samples = LawSamples {
        tau: hist.tau.clone(),
        b: hist.b.clone(),
        lambda: samples.iter().map(|s| s.lambda).collect(),
        remaining: samples.iter().map(|s| s.remaining).collect(),
    };
    let window = (cfg.fit_start, cfg.fit_end);
    let fits = fit_blowup_laws(&law_samples, p, window).map_err(|e| errors.push(format!("law fits: {e}"))).ok();
    let b_slope = fit_inverse_b_slope(&hist.tau, &hist.b, p, window).ok();
    let truncated_slope = truncated_control(data.b0, data.c0, p).map_err(|e| errors.push(format!("truncated control: {e}"))).ok();
    let q = 1.0 / (p - 1.0);
    let sup_bound = samples.iter().map(|s| s.v_sup).fold(0.0, f64::max);
    let center_lower = samples
        .iter()
        .filter(|s| s.record.b > 0.0)
        .map(|s| (s.v_center - (2.0 * s.record.c / (p - 1.0)).powf(q)) / (s.record.b * s.record.b))
        .fold(f64::INFINITY, f64::min);
    let all_accepted = samples.iter().all(|s| s.record.accepted);
    Ok((
        norms,
        Some(PipelineSummary {
            samples,
            law,
            majorants,
            effective,
            fits,
            b_slope,
            truncated_slope,
            t_star,
            sup_bound,
            center_lower,
            all_accepted,
        }),
    ))
}

/// Slope of `1/b` for the truncated system (gauge `l = 2`) over `[10, 100]`.
pub fn truncated_control(b0: f64, c0: f64, p: f64) -> Result<LawFit> {
    if !(b0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "b0",
            value: b0,
            reason: "control run needs b0 > 0",
        });
    }
    let traj = integrate_truncated(TruncatedState { tau: 0.0, b: b0, c: c0 }, Gauge::standard(2.0), p, 100.0, 1e-10, None)?;
    fit_inverse_b_slope(&traj.tau, &traj.b, p, (10.0, 100.0))
}

/// Decomposition history as CSV with columns
/// `tau,t,lambda,remaining,a,b,c,beta,M1,M2,A,B,gamma0,gamma1,R_b,R_c,iterations,orthogonality,accepted`.
pub fn history_csv(summary: &PipelineSummary) -> String {
    let mut s = String::from(
        "tau,t,lambda,remaining,a,b,c,beta,M1,M2,A,B,gamma0,gamma1,R_b,R_c,iterations,orthogonality,accepted\n",
    );
    let m = &summary.majorants;
    let m2 = m
        .m2
        .iter()
        .min_by(|x, y| (x.c_d - 5.0).abs().total_cmp(&(y.c_d - 5.0).abs()));
    for (i, smp) in summary.samples.iter().enumerate() {
        let r = &smp.record;
        let eff = |f: fn(&EffectiveRhs) -> &Vec<f64>| summary.effective.as_ref().map(|e| f(e)[i]).unwrap_or(f64::NAN);
        s.push_str(&format!(
            "{:.10e},{:.17e},{:.10e},{:.10e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.3e},{}\n",
            smp.tau,
            smp.t,
            smp.lambda,
            smp.remaining,
            r.a,
            r.b,
            r.c,
            m.beta[i],
            m.m1[i],
            m2.map(|c| c.m2[i]).unwrap_or(f64::NAN),
            m.a_maj[i],
            m.b_maj[i],
            eff(|e| &e.gamma0),
            eff(|e| &e.gamma1),
            eff(|e| &e.r_b),
            eff(|e| &e.r_c),
            r.iterations,
            r.orthogonality,
            r.accepted
        ));
    }
    s
}
