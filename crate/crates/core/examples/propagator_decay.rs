//! Decay of the weighted sup norm under the projected reframed propagator.

use blowup_lab::dynamics::BetaLaw;
use blowup_lab::feynman_kac::{
    decay_test_functions, discrete_mode3_eigenvalue, propagator_decay, BetaSchedule, DecaySettings,
};

fn main() -> blowup_lab::Result<()> {
    let settings = DecaySettings::default();
    let schedules = [
        ("beta=0", BetaSchedule::Constant { beta: 0.0 }),
        ("beta-law(0.05)", BetaSchedule::Law { law: BetaLaw::new(0.05, settings.p)? }),
    ];
    println!("discrete n=3 eigenvalue {:.9}", discrete_mode3_eigenvalue(&settings)?);
    for (name, schedule) in &schedules {
        for (label, g) in decay_test_functions(&settings)? {
            let rep = propagator_decay(&label, &g, schedule, &settings)?;
            println!("{name:>15} {label:>10}  exponent {:.6}  rms {:.2e}", rep.exponent, rep.rms_residual);
        }
    }
    Ok(())
}
