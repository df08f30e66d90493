use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use blowup_lab::config::{ExperimentConfig, Scenario};
use blowup_lab::dynamics::{integrate_truncated, Gauge, TruncatedState};
use blowup_lab::grid::Grid;
use blowup_lab::pipeline::{history_csv, run_pipeline, truncated_control};
use blowup_lab::spectral::{check_eigen_bounds, extrapolated_eigenvalues, OperatorKind, ProfileParams};
use blowup_lab::suite::{verify_suite, SuiteReport};
use blowup_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "blowup-lab", version, about = "Blowup experiments for u_t = u_xx + |u|^{p-1} u")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat TOML file with ExperimentConfig keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// homogeneous, profile-family or custom.
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    b0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario; writes report.json and a CSV trace.
    Simulate,
    /// Similarity-frame run; writes decomposition.csv and majorants.json.
    Decompose,
    /// Eigenvalue sandwich at (a, b, c) = (1/2, b0, c0) plus the grid check.
    Spectrum,
    /// Monte Carlo kernel fidelity and propagator decay.
    FkVerify,
    /// Truncated parameter dynamics and the equilibrium check.
    Asymptotics,
    /// Acceptance criteria by tag (default: all).
    Suite { tags: Vec<String> },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.display().to_string();
    }
    if let Some(s) = &c.scenario {
        cfg.scenario = Scenario::parse(s)?;
    }
    if let Some(p) = c.p {
        cfg.p = p;
    }
    if let Some(b0) = c.b0 {
        cfg.b0 = b0;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), body)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write(dir, name, &body)
}

fn write_suite(dir: &Path, name: &str, report: &SuiteReport) -> Result<bool> {
    for c in &report.checks {
        println!("{}", c.line());
    }
    write(dir, name, &report.to_json())?;
    Ok(report.passed)
}

fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let report = run_pipeline(cfg);
    write_json(dir, "report.json", &report)?;
    if let Some(h) = &report.homogeneous {
        write(dir, "trace.csv", &h.trace.to_csv())?;
        println!("t* estimate {:?} (exact {:.6})", h.estimate.map(|e| e.t_star), h.t_star_exact);
    }
    if let Some(s) = &report.pipeline {
        write(dir, "history.csv", &history_csv(s))?;
        println!("samples {}, all accepted {}, t* {:.8}", s.samples.len(), s.all_accepted, s.t_star);
    }
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    let ok = report.errors.is_empty()
        && report.pipeline.as_ref().is_none_or(|s| s.all_accepted)
        && report.homogeneous.as_ref().is_none_or(|h| h.estimate.is_some());
    Ok(ok)
}

#[derive(Serialize)]
struct MajorantFile<'a> {
    config_hash: String,
    seed: u64,
    majorants: &'a blowup_lab::decomposition::MajorantSeries,
    all_accepted: bool,
}

fn decompose(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    if cfg.scenario == Scenario::Homogeneous {
        return Err(Error::Config("decompose needs a similarity-frame scenario".into()));
    }
    let report = run_pipeline(cfg);
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    let Some(s) = &report.pipeline else {
        return Ok(false);
    };
    write(dir, "decomposition.csv", &history_csv(s))?;
    write_json(
        dir,
        "majorants.json",
        &MajorantFile {
            config_hash: report.config_hash.clone(),
            seed: report.seed,
            majorants: &s.majorants,
            all_accepted: s.all_accepted,
        },
    )?;
    println!("samples {}, all accepted {}", s.samples.len(), s.all_accepted);
    Ok(s.all_accepted && report.errors.is_empty())
}

fn spectrum(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let params = ProfileParams::free(0.5, cfg.b0, cfg.c0());
    let kind = OperatorKind::Linearized { params, a_tau: 0.0, p: cfg.p };
    let spec = extrapolated_eigenvalues(kind, &Grid::new(20.0, 2001)?, 8)?;
    let rep = check_eigen_bounds(cfg.p, &params, &spec.extrapolated, blowup_lab::suite::tol::EIGEN_SLACK)?;
    let mut csv = String::from("n,lambda,lower,upper,holds\n");
    for r in &rep.rows {
        csv.push_str(&format!("{},{:.12e},{:.12e},{:.12e},{}\n", r.n, r.lambda, r.lower, r.upper, r.holds));
    }
    write(dir, "spectrum.csv", &csv)?;
    let suite = verify_suite(&["spectral".into()], cfg)?;
    Ok(write_suite(dir, "spectrum.json", &suite)? && rep.holds())
}

fn asymptotics(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let init = TruncatedState { tau: 0.0, b: cfg.b0, c: cfg.c0() };
    let traj = integrate_truncated(init, Gauge::standard(2.0), cfg.p, 100.0, 1e-10, None)?;
    let mut csv = String::from("tau,a,b,c\n");
    for i in 0..traj.tau.len() {
        csv.push_str(&format!("{:.10e},{:.12e},{:.12e},{:.12e}\n", traj.tau[i], traj.a[i], traj.b[i], traj.c[i]));
    }
    write(dir, "truncated.csv", &csv)?;
    let fit = truncated_control(cfg.b0, cfg.c0(), cfg.p)?;
    println!("truncated 1/b slope {:.6} (target {:.6})", fit.fitted, fit.target);
    let suite = verify_suite(&["equilibrium".into(), "scaling".into()], cfg)?;
    Ok(write_suite(dir, "asymptotics.json", &suite)? && fit.within(blowup_lab::suite::tol::TRUNCATED_SLOPE_REL))
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.common)?;
    let dir = PathBuf::from(&cfg.out_dir);
    write(&dir, "config.toml", &cfg.to_toml())?;
    match cli.command {
        Command::Simulate => simulate(&cfg, &dir),
        Command::Decompose => decompose(&cfg, &dir),
        Command::Spectrum => spectrum(&cfg, &dir),
        Command::FkVerify => {
            let suite = verify_suite(&["fk".into(), "decay".into()], &cfg)?;
            write_suite(&dir, "fk.json", &suite)
        }
        Command::Asymptotics => asymptotics(&cfg, &dir),
        Command::Suite { tags } => {
            let tags = if tags.is_empty() { vec!["all".to_string()] } else { tags };
            let suite = verify_suite(&tags, &cfg)?;
            write_suite(&dir, "suite.json", &suite)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
