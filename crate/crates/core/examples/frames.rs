//! Similarity frame built from a prescribed `a(τ)`, its consistency with
//! `λ_t = a λ³`, and the constant-`α` frame matched at a later time.

use blowup_lab::frames::{build_lambda1, BlowupFrame};

fn main() -> blowup_lab::Result<()> {
    let p = 3.0;
    let mut frame = BlowupFrame::start(p, 0.45)?;
    let a_of = |tau: f64| 0.5 - 0.05 / (1.0 + 0.3 * tau);
    let dtau = 0.01;
    for k in 0..4000 {
        let tau = k as f64 * dtau;
        frame.push_step(a_of(tau), dtau, a_of(tau + dtau));
    }
    let cons = frame.consistency();
    let t = frame.times();
    println!(
        "tau {:.1}: t {:.10}, lambda {:.4e}, consistency a {:.2e} lambda {:.2e}",
        frame.taus().last().unwrap(),
        t.last().unwrap(),
        frame.lambdas().last().unwrap(),
        cons.a_relative,
        cons.lambda_relative
    );
    for tm in [10.0, 20.0, 40.0] {
        let r = build_lambda1(&frame, tm)?;
        println!("match at tau {tm}: alpha {:.5}, sigma {:.4}, max |lambda/lambda1 - 1| {:.3e}", r.alpha, r.sigma_match(), r.max_ratio_defect(&frame));
    }
    Ok(())
}
