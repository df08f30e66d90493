use blowup_lab::config::ExperimentConfig;
use blowup_lab::dynamics::{truncated_rhs, Gauge};
use blowup_lab::heat::reaction_flow;
use proptest::prelude::*;

proptest! {
    #[test]
    fn config_survives_toml_round_trip(p in 1.5f64..6.0, b0 in 0.01f64..0.2, seed in any::<u64>()) {
        let cfg = ExperimentConfig { p, b0, seed, ..ExperimentConfig::default() };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back.seed, seed);
    }

    #[test]
    fn truncated_field_is_homogeneous_of_degree_two(
        b in 0.0f64..0.3, c in 0.0f64..1.0, l in 1.1f64..4.0, mu in 0.5f64..3.0, p in 1.5f64..6.0,
    ) {
        let g = Gauge::standard(l);
        let gs = Gauge { l, k: mu * mu * g.k };
        let (db, dc) = truncated_rhs(0.0, b, c, g, p, None);
        let (sb, sc) = truncated_rhs(0.0, mu * mu * b, mu * mu * c, gs, p, None);
        let m4 = mu.powi(4);
        prop_assert!((sb - m4 * db).abs() <= 1e-12 * (1.0 + sb.abs()));
        prop_assert!((sc - m4 * dc).abs() <= 1e-12 * (1.0 + sc.abs()));
    }

    #[test]
    fn reaction_flow_is_a_semigroup(u in -1.0f64..1.0, s in 0.0f64..0.05, t in 0.0f64..0.05, p in 1.5f64..5.0) {
        let direct = reaction_flow(u, s + t, p).unwrap();
        let composed = reaction_flow(reaction_flow(u, s, p).unwrap(), t, p).unwrap();
        prop_assert!((direct - composed).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}

#[test]
fn scenario_alias_parses() {
    use blowup_lab::config::Scenario;
    assert_eq!(Scenario::parse("paper-family").unwrap(), Scenario::ProfileFamily);
    let cfg = ExperimentConfig::from_toml("scenario = \"paper-family\"\n").unwrap();
    assert_eq!(cfg.scenario, Scenario::ProfileFamily);
}
