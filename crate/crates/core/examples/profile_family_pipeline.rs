//! Profile-family data through the full pipeline: splitting at every sample,
//! majorants, law fits and the truncated control run.

use blowup_lab::config::ExperimentConfig;
use blowup_lab::pipeline::run_pipeline;

fn main() {
    let cfg = ExperimentConfig::default();
    let report = run_pipeline(&cfg);
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    let Some(s) = report.pipeline else {
        return;
    };
    println!("samples {}, all accepted {}, t* {:.10}", s.samples.len(), s.all_accepted, s.t_star);
    for smp in s.samples.iter().filter(|x| (x.tau * 100.0).round() as i64 % 500 == 0) {
        let r = &smp.record;
        let beta = s.law.beta(smp.tau);
        println!(
            "tau {:6.2} a {:.6} b {:.6} beta {:.6} c {:.6} (a-1/2+b)/beta^2 {:+.3} lambda {:.4e} remaining {:.3e}",
            smp.tau,
            r.a,
            r.b,
            beta,
            r.c,
            (r.a - 0.5 + 2.0 * r.b / (cfg.p - 1.0)) / (beta * beta),
            smp.lambda,
            smp.remaining
        );
    }
    if let Some(f) = &s.b_slope {
        println!("1/b slope {:.4} (target {:.4}, rel {:.3})", f.fitted, f.target, f.relative_error);
    }
    if let Some(f) = &s.truncated_slope {
        println!("truncated slope {:.6} (rel {:.2e})", f.fitted, f.relative_error);
    }
    if let Some(fits) = &s.fits {
        for f in &fits.fits {
            println!("{}: fitted {:.5} target {:.5} rel {:.3}", f.name, f.fitted, f.target, f.relative_error);
        }
    }
    let m = &s.majorants;
    let last = m.tau.len() - 1;
    println!("M1 {:.4} A {:.4} B {:.4}", m.m1[last], m.a_maj[last], m.b_maj[last]);
    for c in &m.m2 {
        println!("M2(C_D={}) {:.3e} coverage {:.2}", c.c_d, c.m2[last], c.coverage());
    }
    println!("sup bound {:.4}, center lower {:.4}", s.sup_bound, s.center_lower);
}
