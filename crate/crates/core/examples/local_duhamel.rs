//! Picard iteration for the Duhamel formula on the local existence slab,
//! checked against the split stepper. Small data gives a long slab, where
//! the second-order splitting error is visible above the spatial mismatch.

use blowup_lab::grid::{Field, Grid, Parity};
use blowup_lab::heat::{duhamel_local_solve, step_imex, Problem};

fn main() -> blowup_lab::Result<()> {
    let grid = Grid::new(20.0, 2001)?;
    let u0 = Field::from_fn(grid, Parity::Even, |x| 0.1 * (-x * x).exp());
    let sol = duhamel_local_solve(&Problem::new(3.0, u0.clone(), 1.0))?;
    println!("slab {:.6e}, {} Picard iterations", sol.slab, sol.iterations);
    println!("successive differences {:?}", sol.history);
    println!("max sup {:.6} <= bound {:.6}: {}", sol.max_sup, sol.bound, sol.bound_holds());
    for steps in [2, 4, 8, 16, 32] {
        let dt = sol.slab / steps as f64;
        let mut u = u0.clone();
        for _ in 0..steps {
            u = step_imex(&u, dt, 3.0)?;
        }
        println!("{steps:>3} split steps: sup difference {:.3e}", u.sub(sol.trajectory.last().unwrap())?.sup_norm());
    }
    Ok(())
}
