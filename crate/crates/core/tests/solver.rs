use blowup_lab::config::{ExperimentConfig, Scenario};
use blowup_lab::grid::{Field, Grid, Parity};
use blowup_lab::heat::{duhamel_local_solve, step_imex, Problem};
use blowup_lab::suite::check_scaling;
use blowup_lab::pipeline::run_pipeline;

fn local_error(steps: usize, nodes: usize) -> f64 {
    let grid = Grid::new(20.0, nodes).unwrap();
    let u0 = Field::from_fn(grid, Parity::Even, |x| 0.1 * (-x * x).exp());
    let duh = duhamel_local_solve(&Problem::new(3.0, u0.clone(), 1.0)).unwrap();
    let dt = duh.slab / steps as f64;
    let mut u = u0;
    for _ in 0..steps {
        u = step_imex(&u, dt, 3.0).unwrap();
    }
    u.sub(duh.trajectory.last().unwrap()).unwrap().sup_norm()
}

#[test]
fn split_error_against_duhamel_drops_at_second_order() {
    // Small data gives a long slab, so the splitting error dominates the
    // spatial mismatch between the two reference operators.
    let e: Vec<f64> = [2, 4, 8].iter().map(|&n| local_error(n, 2001)).collect();
    assert!(e[0] / e[1] >= 3.5 && e[1] / e[2] >= 3.5, "{e:?}");
}

#[test]
fn homogeneous_quadratic_case() {
    let cfg = ExperimentConfig {
        scenario: Scenario::Homogeneous,
        p: 2.0,
        homogeneous_u0: 2.0,
        ..ExperimentConfig::default()
    };
    let rep = run_pipeline(&cfg);
    let h = rep.homogeneous.expect("homogeneous run");
    assert!((h.t_star_exact - 0.5).abs() < 1e-15);
    assert!(h.relative_error.unwrap() < 0.01, "{:?}", h.estimate);
}

#[test]
fn scaling_equivariance_of_solver_and_truncated_system() {
    let c = check_scaling();
    assert!(c.passed, "{}", c.line());
}
