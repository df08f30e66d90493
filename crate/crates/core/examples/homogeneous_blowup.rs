//! Constant data blows up at `1/((p-1) u0^{p-1})`; compares the solver's
//! extrapolated time for a few exponents.

use blowup_lab::config::{ExperimentConfig, Scenario};
use blowup_lab::pipeline::run_pipeline;

fn main() {
    for (p, u0) in [(3.0, 1.0), (2.0, 2.0), (5.0, 1.0)] {
        let cfg = ExperimentConfig {
            scenario: Scenario::Homogeneous,
            p,
            homogeneous_u0: u0,
            ..ExperimentConfig::default()
        };
        let rep = run_pipeline(&cfg);
        let Some(h) = rep.homogeneous else {
            eprintln!("p = {p}: {:?}", rep.errors);
            continue;
        };
        let est = h.estimate.map(|e| e.t_star).unwrap_or(f64::NAN);
        let lam = h.lambda_fit.map(|f| f.fitted).unwrap_or(f64::NAN);
        println!("p {p} u0 {u0}: t* exact {:.6} estimate {est:.6}, lambda exponent {lam:.4}", h.t_star_exact);
    }
}
