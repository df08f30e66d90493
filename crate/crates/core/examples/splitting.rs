//! Newton solve for the splitting `v = V_{g(v)} + η` with orthogonality
//! conditions, on a perturbed profile.

use blowup_lab::decomposition::solve_g;
use blowup_lab::grid::{Field, Grid, Parity};
use blowup_lab::spectral::{profile, ProfileKind, ProfileParams};
use blowup_lab::suite::splitting_direction;

fn main() -> blowup_lab::Result<()> {
    let grid = Grid::new(40.0, 4001)?;
    let psi = Field::from_fn(grid, Parity::Even, splitting_direction);
    for b0 in [0.1, 0.05, 0.025] {
        let base = profile(ProfileKind::Ungauged, &ProfileParams::new(0.5, b0)?, 3.0, &grid)?;
        let v = base.axpy(b0 * b0, &psi)?.with_parity(Parity::Even);
        let s = solve_g(&v, (0.5, b0), 3.0)?;
        println!(
            "b0 {b0}: a {:.8} b {:.8} c {:.8}, {} iterations, |G| {:.1e}, orthogonality {:.1e}",
            s.params.a,
            s.params.b,
            s.params.c,
            s.iterations,
            s.residual,
            s.relative_orthogonality()
        );
    }
    Ok(())
}
