//! The truncated `(b, c)` system under several gauges: approach to the
//! marginally stable point and the `1/b` slope.

use blowup_lab::dynamics::{fit_inverse_b_slope, integrate_truncated, jacobian_at_equilibrium, Gauge, TruncatedState};

fn main() -> blowup_lab::Result<()> {
    let p = 3.0;
    for l in [1.5, 2.0, 3.0] {
        let lin = jacobian_at_equilibrium(l, p)?;
        let traj = integrate_truncated(TruncatedState { tau: 0.0, b: 0.05, c: 0.475 }, Gauge::standard(l), p, 200.0, 1e-10, None)?;
        let fit = fit_inverse_b_slope(&traj.tau, &traj.b, p, (20.0, 200.0))?;
        let end = traj.last();
        println!(
            "l {l}: eigenvalues {:?}, b(200) {:.5e}, c(200) {:.6}, 1/b slope {:.4} (target {:.4})",
            lin.eigenvalues, end.b, end.c, fit.fitted, fit.target
        );
    }
    Ok(())
}
