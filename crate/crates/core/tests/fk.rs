use blowup_lab::config::ExperimentConfig;
use blowup_lab::feynman_kac::{
    chapman_kolmogorov_check, derivative_bound_check, mehler_column_sums, reframed_gradient_bound, reframed_v,
    McSettings, MehlerKernel,
};
use blowup_lab::suite::verify_suite;

const ALPHA: f64 = 0.5;
const BETA: f64 = 0.05;
const P: f64 = 3.0;

#[test]
fn chapman_kolmogorov_on_three_points() {
    let v = reframed_v(ALPHA, BETA, P);
    let mehler = MehlerKernel::standard(ALPHA).unwrap();
    let settings = McSettings {
        n_paths: 4000,
        n_steps: 32,
        seed: 7,
    };
    let points = [(0.0, 0.0), (0.5, -0.5), (-1.0, 0.5)];
    let rows = chapman_kolmogorov_check(&v, &mehler, 0.0, 0.5, 1.0, &points, 8.0, 81, &settings).unwrap();
    for r in &rows {
        assert!(r.z_score < 3.0, "{r:?}");
    }
}

#[test]
fn gradient_of_weight_is_bounded_by_window() {
    let v = reframed_v(ALPHA, BETA, P);
    let k = reframed_gradient_bound(ALPHA, BETA, P);
    let settings = McSettings {
        n_paths: 20000,
        n_steps: 64,
        seed: 11,
    };
    let points = [(0.0, 0.5), (1.0, -1.0), (-0.5, 2.0)];
    let rows = derivative_bound_check(&v, k, ALPHA, &[0.25, 0.5, 1.0], &points, 1e-3, &settings).unwrap();
    assert!(rows.iter().all(|r| r.holds), "{rows:?}");
}

#[test]
fn mehler_column_sums_grow_like_exp_two_alpha_r() {
    let kernel = MehlerKernel::standard(ALPHA).unwrap();
    let rows = mehler_column_sums(&kernel, &[0, 1, 2, 3, 4], &[0.5, 1.0, 2.0, 4.0, 8.0], 4.0).unwrap();
    // As r grows only the ground state survives; for n = 4 its coefficient
    // is E(1 + z²)² = 17 under N(0, 1/α), so the ratio saturates below 20.
    let worst = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    assert!(worst.is_finite() && worst < 20.0, "{rows:?}");
    let n4: Vec<f64> = rows.iter().filter(|r| r.n == 4).map(|r| r.ratio).collect();
    assert!((n4[4] - n4[3]).abs() < 0.1 * n4[3], "{n4:?}");
}

#[test]
fn fk_report_is_byte_identical_on_repeat() {
    let cfg = ExperimentConfig {
        fk_paths: 20000,
        ..ExperimentConfig::default()
    };
    let a = verify_suite(&["fk".into()], &cfg).unwrap().to_json();
    let b = verify_suite(&["fk".into()], &cfg).unwrap().to_json();
    assert_eq!(a, b);
    let other = verify_suite(&["fk".into()], &ExperimentConfig { seed: 43, ..cfg }).unwrap().to_json();
    assert_ne!(a, other);
}
