//! Experiment configuration (flat key-value TOML) and initial data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure_exponent, ensure_positive, Error, Result};
use crate::grid::{weighted_sup_norm, Field, Grid, Parity, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Spatially constant data on the physical grid.
    Homogeneous,
    /// Profile `(2c₀/(p-1+b₀x²))^{1/(p-1)}` plus `C b₀² cos(x) e^{-x²/8}`.
    /// `paper-family` is accepted as an input alias.
    #[serde(alias = "paper-family")]
    ProfileFamily,
    /// Same family with a user-chosen perturbation amplitude and width.
    Custom,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Homogeneous => "homogeneous",
            Scenario::ProfileFamily => "profile-family",
            Scenario::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Scenario::Homogeneous),
            "profile-family" | "paper-family" => Ok(Scenario::ProfileFamily),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Every key is optional in the file; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub p: f64,
    pub b0: f64,
    /// Defaults to `1/2 - b₀/(p-1)`.
    pub c0: Option<f64>,
    /// `C` in `δ₃ = C b₀²`.
    pub delta_c: f64,
    /// Width of the `cos(x) e^{-x²/(2w²)}` perturbation (custom scenario).
    pub perturbation_width: f64,
    /// Largest admissible unweighted deviation `δ₀`.
    pub delta0_max: f64,
    /// Rescale the data by `k₀` to the one-parameter family.
    pub rescale: bool,
    pub homogeneous_u0: f64,
    /// Similarity grid.
    pub half_width: f64,
    pub nodes: usize,
    /// Physical grid for the direct solver.
    pub phys_half_width: f64,
    pub phys_nodes: usize,
    pub dtau: f64,
    pub tau_end: f64,
    /// Decomposition every `cadence` steps while `b ≥ 2β(0)`, every step after.
    pub cadence: usize,
    pub eps0: f64,
    pub c_d: f64,
    pub cutoffs: Vec<f64>,
    pub fit_start: f64,
    pub fit_end: f64,
    pub cap: f64,
    pub dt_max: f64,
    pub c_safe: f64,
    pub seed: u64,
    pub fk_paths: usize,
    pub fk_steps: usize,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::ProfileFamily,
            p: 3.0,
            b0: 0.05,
            c0: None,
            delta_c: 1.0,
            perturbation_width: 2.0,
            delta0_max: 0.1,
            rescale: false,
            homogeneous_u0: 1.0,
            half_width: 120.0,
            nodes: 4001,
            phys_half_width: 20.0,
            phys_nodes: 2001,
            dtau: 0.01,
            tau_end: 60.0,
            cadence: 10,
            eps0: 0.1,
            c_d: 5.0,
            cutoffs: vec![3.0, 5.0, 10.0],
            fit_start: 5.0,
            fit_end: 50.0,
            cap: 1e6,
            dt_max: 1e-3,
            c_safe: 0.01,
            seed: 42,
            fk_paths: 100_000,
            fk_steps: 64,
            out_dir: "out".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// `c₀`, defaulting to the one-parameter gauge `1/2 - b₀/(p-1)`.
    pub fn c0(&self) -> f64 {
        self.c0.unwrap_or(0.5 - self.b0 / (self.p - 1.0))
    }

    /// Hex SHA-256 of the canonical TOML form. `out_dir` is blanked first so
    /// the hash names the experiment, not where it was written.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: String::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_exponent(self.p)?;
        ensure_positive("dtau", self.dtau)?;
        ensure_positive("tau_end", self.tau_end)?;
        ensure_positive("half_width", self.half_width)?;
        ensure_positive("phys_half_width", self.phys_half_width)?;
        ensure_positive("eps0", self.eps0)?;
        ensure_positive("c_d", self.c_d)?;
        ensure_positive("cap", self.cap)?;
        ensure_positive("dt_max", self.dt_max)?;
        ensure_positive("c_safe", self.c_safe)?;
        if self.nodes < 5 || self.nodes % 2 == 0 || self.phys_nodes < 5 || self.phys_nodes % 2 == 0 {
            return Err(Error::Config("node counts must be odd and at least 5".into()));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be at least 1".into()));
        }
        if self.fit_start >= self.fit_end {
            return Err(Error::Config("fit_start must be below fit_end".into()));
        }
        if self.fk_steps < 2 {
            return Err(Error::Config("fk_steps must be at least 2".into()));
        }
        match self.scenario {
            Scenario::Homogeneous => ensure_positive("homogeneous_u0", self.homogeneous_u0)?,
            Scenario::ProfileFamily | Scenario::Custom => {
                if !(self.b0 >= 0.0 && self.b0 < 1.0) {
                    return Err(Error::Config(format!("b0 = {} outside [0, 1)", self.b0)));
                }
                if self.scenario == Scenario::ProfileFamily && !(0.5..=2.0).contains(&self.c0()) && self.c0.is_some() {
                    return Err(Error::Config(format!("c0 = {} outside [1/2, 2]", self.c0())));
                }
                ensure_positive("c0", self.c0())?;
                ensure_positive("perturbation_width", self.perturbation_width)?;
            }
        }
        Ok(())
    }

    pub fn similarity_grid(&self) -> Result<Grid> {
        Grid::new(self.half_width, self.nodes)
    }

    pub fn physical_grid(&self) -> Result<Grid> {
        Grid::new(self.phys_half_width, self.phys_nodes)
    }
}

/// `k₀ = (2c₀ + 2b₀/(p-1))^{-1/2}`, the factor that maps the two-parameter
/// family onto `c₀ = 1/2 - b₀/(p-1)`.
pub fn rescale_k0(c0: f64, b0: f64, p: f64) -> f64 {
    (2.0 * c0 + 2.0 * b0 / (p - 1.0)).powf(-0.5)
}

/// `(2c/(p-1+bx²))^{1/(p-1)}`.
pub fn family_profile(x: f64, c: f64, b: f64, p: f64) -> f64 {
    (2.0 * c / (p - 1.0 + b * x * x)).powf(1.0 / (p - 1.0))
}

/// Deviation of the data from its reference profile in the two norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialNorms {
    /// `‖u₀ - profile‖_∞`.
    pub delta0: f64,
    /// `‖⟨x⟩^{-3}(u₀ - profile)‖_∞`.
    pub delta3: f64,
    /// `C b₀²`.
    pub delta3_limit: f64,
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub field: Field,
    /// Parameters of the reference profile the data were built around
    /// (after rescaling, if any).
    pub b0: f64,
    pub c0: f64,
    pub k0: Option<f64>,
    pub norms: Option<InitialNorms>,
}

fn deviation_norms(field: &Field, c: f64, b: f64, p: f64, limit: f64) -> Result<InitialNorms> {
    let profile = Field::from_fn(*field.grid(), Parity::Even, |x| family_profile(x, c, b, p));
    let dev = field.sub(&profile)?;
    Ok(InitialNorms {
        delta0: dev.sup_norm(),
        delta3: weighted_sup_norm(&dev, &WeightSpec::new(3, 0.0)?)?,
        delta3_limit: limit,
    })
}

/// Builds `u₀` on `grid` and checks the weighted deviation bounds.
pub fn make_initial_data(cfg: &ExperimentConfig, grid: &Grid) -> Result<InitialData> {
    cfg.validate()?;
    let p = cfg.p;
    let q = 1.0 / (p - 1.0);
    if cfg.scenario == Scenario::Homogeneous {
        let u = cfg.homogeneous_u0;
        return Ok(InitialData {
            field: Field::from_fn(*grid, Parity::Even, |_| u),
            b0: 0.0,
            c0: 0.5 * (p - 1.0) * u.powf(p - 1.0),
            k0: None,
            norms: None,
        });
    }
    let (b0, c0) = (cfg.b0, cfg.c0());
    let amp = cfg.delta_c * b0 * b0;
    let width = if cfg.scenario == Scenario::ProfileFamily { 2.0 } else { cfg.perturbation_width };
    let u0 = move |x: f64| family_profile(x, c0, b0, p) + amp * x.cos() * (-x * x / (2.0 * width * width)).exp();
    let limit = cfg.delta_c.abs() * b0 * b0;
    let field = Field::from_fn(*grid, Parity::Even, u0);
    let norms = deviation_norms(&field, c0, b0, p, limit)?;
    if norms.delta3 > limit * (1.0 + 1e-12) || norms.delta0 > cfg.delta0_max {
        return Err(Error::InitialData(format!(
            "weighted deviations δ₀ = {:.3e}, δ₃ = {:.3e} exceed limits {:.3e}, {:.3e}",
            norms.delta0, norms.delta3, cfg.delta0_max, limit
        )));
    }
    if !cfg.rescale {
        return Ok(InitialData {
            field,
            b0,
            c0,
            k0: None,
            norms: Some(norms),
        });
    }
    let k0 = rescale_k0(c0, b0, p);
    let beta0 = b0 * k0 * k0;
    let scaled = Field::from_fn(*grid, Parity::Even, |x| k0.powf(2.0 * q) * u0(k0 * x));
    let c_new = 0.5 - beta0 / (p - 1.0);
    let norms = deviation_norms(&scaled, c_new, beta0, p, cfg.delta_c.abs() * beta0 * beta0)?;
    Ok(InitialData {
        field: scaled,
        b0: beta0,
        c0: c_new,
        k0: Some(k0),
        norms: Some(norms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_at_zero_b() {
        let cfg = ExperimentConfig {
            b0: 0.0,
            c0: Some(0.5),
            delta_c: 0.0,
            ..Default::default()
        };
        let grid = Grid::new(10.0, 101).unwrap();
        let data = make_initial_data(&cfg, &grid).unwrap();
        assert!(data.field.values().iter().all(|v| (v - 0.5f64.sqrt()).abs() < 1e-15));
        assert!((data.field.values()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn profile_family_norms_within_limit() {
        let cfg = ExperimentConfig::default();
        let grid = Grid::new(40.0, 2001).unwrap();
        let data = make_initial_data(&cfg, &grid).unwrap();
        let n = data.norms.unwrap();
        assert!(n.delta3 <= 1.0 * 0.05 * 0.05 * (1.0 + 1e-12));
        assert!((n.delta0 - 0.0025).abs() < 1e-12);
    }

    #[test]
    fn oversized_perturbation_rejected() {
        let cfg = ExperimentConfig {
            delta_c: 100.0,
            b0: 0.1,
            ..Default::default()
        };
        let grid = Grid::new(40.0, 2001).unwrap();
        assert!(matches!(make_initial_data(&cfg, &grid), Err(Error::InitialData(_))));
    }

    #[test]
    fn rescaling_round_trip() {
        let cfg = ExperimentConfig {
            b0: 0.05,
            c0: Some(0.8),
            rescale: true,
            ..Default::default()
        };
        let grid = Grid::new(40.0, 4001).unwrap();
        let plain = make_initial_data(&ExperimentConfig { rescale: false, ..cfg.clone() }, &grid).unwrap();
        let scaled = make_initial_data(&cfg, &grid).unwrap();
        let k0 = scaled.k0.unwrap();
        let p = cfg.p;
        // Profile part maps exactly onto the one-parameter family.
        let beta0 = 0.05 * k0 * k0;
        for x in [0.0, 1.0, 7.5] {
            let lhs = k0.powf(2.0 / (p - 1.0)) * family_profile(k0 * x, 0.8, 0.05, p);
            let rhs = ((1.0 - 2.0 * beta0 / (p - 1.0)) / (p - 1.0 + beta0 * x * x)).powf(1.0 / (p - 1.0));
            assert!((lhs - rhs).abs() < 1e-14);
        }
        assert!((scaled.c0 - (0.5 - beta0 / (p - 1.0))).abs() < 1e-15);
        // Deviations shrink by k₀^{2/(p-1)} ≤ 1 and stay within the same δ's.
        let (a, b) = (plain.norms.unwrap(), scaled.norms.unwrap());
        assert!(k0 < 1.0);
        assert!((b.delta0 - k0.powf(2.0 / (p - 1.0)) * a.delta0).abs() < 1e-12);
        assert!(b.delta3 <= a.delta3);
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(cfg.hash().len(), 64);
        let partial = ExperimentConfig::from_toml("p = 2.0\nscenario = \"homogeneous\"\n").unwrap();
        assert_eq!(partial.p, 2.0);
        assert_eq!(partial.scenario, Scenario::Homogeneous);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }
}
