//! Experiment configuration: a versioned TOML tree in which unknown keys are
//! errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spikesim::model::{AsymLinear, CycleBoundaries, DiffusionModel, Family, TaylorBounds};
use spikesim::simulate::SimConfig;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub boundaries: BoundaryConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// Restoring slope for the BB and Rabi presets.
    #[serde(default)]
    pub b: Option<f64>,
    /// Coefficients of the asymmetric family.
    #[serde(default)]
    pub asym: Option<AsymLinear>,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub taylor: Option<TaylorBounds>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPreset {
    /// `α = ε`, `β = 2ε`.
    Example1,
    /// `α = ε/b`, `β = ε/b + ε²`.
    Rabi,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub preset: Option<BoundaryPreset>,
    pub alpha_mult: Option<f64>,
    pub beta_mult: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    /// Target `λ² p_{ε,z_cal}`.
    pub j: f64,
    /// Calibration level of the scaling curve.
    pub z_cal: f64,
    /// Strictly decreasing ε values for sweeps and κ extrapolation.
    pub eps_grid: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            j: 1.0,
            z_cal: 1.0,
            eps_grid: vec![0.1, 0.05, 0.02],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Monte Carlo paths (or independent runs for `spikes`).
    pub paths: usize,
    /// Horizon `T` of spike trains, model clock.
    pub horizon: f64,
    pub x_start: f64,
    pub z_target: f64,
    pub seed: u64,
    /// Worker threads; `0` uses all cores.
    pub workers: usize,
    /// `(x, r, R)` triples for `hitprob`; defaults to `(2ε, ε, 1)`.
    pub triples: Vec<[f64; 3]>,
    /// Atom thresholds for `hitting-law`, as multiples of `1/rate`.
    pub t0_multiples: Vec<f64>,
    /// Threshold multiple used for the pass/fail check of `hitting-law`.
    pub t0_check: f64,
    /// Grid for `validate`; defaults to a geometric grid below `delta0`.
    pub validation_grid: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: 10_000,
            horizon: 10.0,
            x_start: 0.5,
            z_target: 1.0,
            seed: 0,
            workers: 0,
            triples: Vec::new(),
            t0_multiples: vec![0.01, 0.05, 0.10],
            t0_check: 0.05,
            validation_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// A BB-linear configuration with the Example-1 boundaries.
    pub fn bb_default(b: f64, epsilon: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelConfig {
                family: Family::BBLinear,
                b: Some(b),
                asym: None,
                lambda: 1.0,
                epsilon,
                taylor: None,
            },
            boundaries: BoundaryConfig {
                preset: Some(BoundaryPreset::Example1),
                ..BoundaryConfig::default()
            },
            scaling: ScalingConfig::default(),
            run: RunConfig::default(),
            sim: SimConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.model()?;
        self.boundaries()?;
        let s = &self.scaling;
        if !(s.j > 0.0 && s.z_cal > 0.0) || !s.j.is_finite() || !s.z_cal.is_finite() {
            return Err(invalid("scaling.j and scaling.z_cal must be positive"));
        }
        if s.eps_grid.is_empty() || s.eps_grid.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("scaling.eps_grid must hold positive values"));
        }
        if s.eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("scaling.eps_grid must be strictly decreasing"));
        }
        let r = &self.run;
        if !(r.horizon > 0.0 && r.x_start > 0.0 && r.z_target > 0.0) || !r.horizon.is_finite() {
            return Err(invalid("run.horizon, run.x_start and run.z_target must be positive"));
        }
        if r.t0_multiples.iter().any(|t| !(*t > 0.0)) || !(r.t0_check > 0.0) {
            return Err(invalid("atom thresholds must be positive"));
        }
        for t in &r.triples {
            if !(t[1] < t[2] && t[1] >= 0.0 && t[0] >= t[1] && t[0] <= t[2]) {
                return Err(invalid(format!("hitprob triple {t:?} needs 0 <= r <= x <= R, r < R")));
            }
        }
        self.sim.check().map_err(|e| invalid(format!("sim: {e}")))?;
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats is empty"));
        }
        Ok(())
    }

    /// The model at the configured λ and ε.
    pub fn model(&self) -> Result<DiffusionModel, CliError> {
        let m = &self.model;
        let need_b = || m.b.ok_or_else(|| invalid("model.b is required for this family"));
        let model = match m.family {
            Family::BBLinear => DiffusionModel::bb_linear(need_b()?, m.lambda, m.epsilon),
            Family::RabiLinearized => DiffusionModel::rabi_linearized(need_b()?, m.lambda, m.epsilon),
            Family::AsymLinear => {
                let c = m.asym.ok_or_else(|| invalid("model.asym is required for the asym_linear family"))?;
                DiffusionModel::asym_linear(c, m.lambda, m.epsilon)
            }
            Family::Custom => return Err(invalid("custom coefficients cannot be given in a config file")),
        };
        model.map_err(|e| invalid(format!("model: {e}")))
    }

    pub fn boundaries(&self) -> Result<CycleBoundaries, CliError> {
        let b = &self.boundaries;
        match (b.preset, b.alpha_mult, b.beta_mult) {
            (Some(BoundaryPreset::Example1), None, None) => Ok(CycleBoundaries::example1()),
            (Some(BoundaryPreset::Rabi), None, None) => {
                let slope = self.model.b.ok_or_else(|| invalid("the rabi boundary preset needs model.b"))?;
                Ok(CycleBoundaries::rabi(slope))
            }
            (None, Some(a), Some(bm)) if a > 0.0 && a < bm => Ok(CycleBoundaries::Linear {
                alpha_mult: a,
                beta_mult: bm,
            }),
            (None, None, None) => Err(invalid("boundaries: give a preset or alpha_mult and beta_mult")),
            _ => Err(invalid("boundaries: use either a preset or 0 < alpha_mult < beta_mult, not both")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[model]
family = "bb_linear"
b = 1.0
epsilon = 0.02
[boundaries]
preset = "example1"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.model.lambda, 1.0);
        assert_eq!(c.scaling.eps_grid, vec![0.1, 0.05, 0.02]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("b = 1.0", "b = 1.0\nbb = 2.0");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))));
        let text = format!("{MINIMAL}\n[sim]\ndt_maxx = 0.1\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn version_and_grid_are_checked() {
        let text = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}\n[scaling]\neps_grid = [0.01, 0.02]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
