//! Monte Carlo kernel with the reframed potential versus the direct
//! propagator, on a 5x5 stencil.

use blowup_lab::feynman_kac::{kernel_fidelity, square_stencil, McSettings, MehlerKernel, OracleSettings};

fn main() -> blowup_lab::Result<()> {
    let (alpha, beta, p) = (0.5, 0.05, 3.0);
    let mehler = MehlerKernel::calibrate(alpha, 1.0)?;
    println!("calibrated constant {:.10} (standard {:.10})", mehler.constant, blowup_lab::feynman_kac::MEHLER_STANDARD_CONSTANT);
    let settings = McSettings::default();
    let report = kernel_fidelity(alpha, beta, p, 1.0, &square_stencil(1.0), &mehler, &settings, &OracleSettings::default())?;
    println!("{:>6} {:>6} {:>14} {:>10} {:>14} {:>10} {:>6}", "x", "y", "mc", "se", "direct", "err", "z");
    for c in &report.points {
        println!(
            "{:>6.2} {:>6.2} {:>14.8} {:>10.2e} {:>14.8} {:>10.2e} {:>6.2}",
            c.x, c.y, c.monte_carlo, c.mc_std_error, c.oracle, c.oracle_error, c.z_score
        );
    }
    println!("max z = {:.3}, rejected = {}", report.max_z(), report.rejected);
    Ok(())
}
