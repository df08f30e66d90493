//! Lowest eigenvalues of the linearized operator with the two-sided bounds,
//! after Richardson extrapolation in the grid spacing.

use blowup_lab::grid::Grid;
use blowup_lab::spectral::{check_eigen_bounds, extrapolated_eigenvalues, OperatorKind, ProfileParams};

fn main() -> blowup_lab::Result<()> {
    let grid = Grid::new(20.0, 2001)?;
    let p = 3.0;
    for (a, b, c) in [(0.5, 0.05, 0.475), (0.25, 0.2, 1.0), (1.0, 0.0, 0.25)] {
        let params = ProfileParams::free(a, b, c);
        let spec = extrapolated_eigenvalues(OperatorKind::Linearized { params, a_tau: 0.0, p }, &grid, 8)?;
        let rep = check_eigen_bounds(p, &params, &spec.extrapolated, 1e-5)?;
        println!("a {a} b {b} c {c}: holds {}, min margin {:.3e}", rep.holds(), rep.min_margin());
        for r in &rep.rows {
            println!("  n {} : {:.6} <= {:.8} <= {:.6}", r.n, r.lower, r.lambda, r.upper);
        }
    }
    Ok(())
}
