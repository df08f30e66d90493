//! Gaussian data with negative scaled energy `S_T` and the resulting
//! blowup times.

use blowup_lab::grid::{Field, Grid, Parity};
use blowup_lab::heat::{scaled_energy_s_t, solve_to_blowup, Problem};
use blowup_lab::suite::CRITERION_CASES;

fn main() -> blowup_lab::Result<()> {
    let grid = Grid::new(20.0, 2001)?;
    for c in CRITERION_CASES {
        let u0 = Field::from_fn(grid, Parity::Even, |x| c.amp * (-(x / c.width).powi(2)).exp());
        let s_t = scaled_energy_s_t(&u0, c.p, c.t_cap)?;
        let run = solve_to_blowup(&Problem::new(c.p, u0, 2.0 * c.t_cap))?;
        let e = &run.trace.records;
        println!(
            "p {} amp {} width {} T {}: S_T {:+.4e}, t* {:?}, E {:.3e} -> {:.3e} over {} steps",
            c.p,
            c.amp,
            c.width,
            c.t_cap,
            s_t,
            run.estimate.map(|x| x.t_star),
            e[0].energy_e,
            e[e.len() - 1].energy_e,
            e.len()
        );
    }
    Ok(())
}
