//! Experiment configuration. Every section and key is optional; unknown keys
//! are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qdarwin::model::{Couplings, ModelParams, TimeGrid, DEFAULT_BUDGET};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub time: TimeSection,
    pub simulate: SimulateSection,
    pub stats: StatsSection,
    pub baseline: BaselineSection,
    pub output: OutputSection,
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_env: usize,
    pub sigma_d: f64,
    pub sigma_m: f64,
    pub a: f64,
    pub b: f64,
    pub alpha_phase: f64,
    pub beta_phase: f64,
    pub seed: u64,
    /// Explicit couplings replacing the random draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<CouplingsSection>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            n_env: 16,
            sigma_d: 0.1,
            sigma_m: 0.001,
            a: 0.5,
            b: 0.5,
            alpha_phase: 0.0,
            beta_phase: 0.0,
            seed: 0,
            couplings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsSection {
    pub d: Vec<f64>,
    /// Row-major `N × N`; the diagonal is ignored. Missing means `m ≡ 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    Log,
    Linear,
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub scale: TimeScale,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    /// Used when `scale = "list"`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            scale: TimeScale::Log,
            t_min: 0.1,
            t_max: 1000.0,
            n_points: 200,
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub budget: usize,
    pub deltas: Vec<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            budget: DEFAULT_BUDGET,
            deltas: vec![0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsSection {
    pub t_min: f64,
    pub t_max: f64,
    pub n_samples: usize,
    /// Fragment sizes for the `|Γ_F|²` and `|Δ|²` rows.
    pub fragment_sizes: Vec<usize>,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            t_min: 1e3,
            t_max: 1e5,
            n_samples: 10_000,
            fragment_sizes: vec![1, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub d_s: usize,
    pub d_e: usize,
    pub n_env: usize,
    pub n_samples: usize,
    pub budget: usize,
    pub deltas: Vec<f64>,
    /// Interior points of the `a` grid for `fstar.csv`.
    pub a_points: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            d_s: 2,
            d_e: 2,
            n_env: 8,
            n_samples: 200,
            budget: DEFAULT_BUDGET,
            deltas: vec![0.1],
            a_points: 99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    /// Convert an entropy from nats.
    pub fn entropy(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub unit: Unit,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            unit: Unit::Nats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Cross-check analytic spectra against the state-vector route.
    pub enabled: bool,
    pub n_max: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            enabled: false,
            n_max: 12,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model_params().validate()?;
        if let Some(c) = &self.model.couplings {
            if c.d.len() != self.model.n_env {
                return Err(CliError::Config(format!(
                    "model.couplings.d has {} entries, expected n_env = {}",
                    c.d.len(),
                    self.model.n_env
                )));
            }
        }
        self.time_grid()?;
        if self.simulate.budget == 0 {
            return Err(CliError::Config("simulate.budget must be positive".into()));
        }
        for &d in self.simulate.deltas.iter().chain(&self.baseline.deltas) {
            if !(d > 0.0 && d < 1.0) {
                return Err(CliError::Config(format!("delta {d} must lie in (0, 1)")));
            }
        }
        let s = &self.stats;
        if !(s.t_min >= 0.0 && s.t_max > s.t_min && s.t_max.is_finite()) {
            return Err(CliError::Config("stats window needs 0 <= t_min < t_max".into()));
        }
        if s.n_samples < 100 {
            return Err(CliError::Config("stats.n_samples must be at least 100".into()));
        }
        if s.fragment_sizes.contains(&0) {
            return Err(CliError::Config("stats.fragment_sizes entries must be positive".into()));
        }
        let b = &self.baseline;
        if b.d_s < 2 || b.d_e < 2 || b.n_env == 0 || b.n_samples < 2 || b.budget == 0 {
            return Err(CliError::Config(
                "baseline needs d_s, d_e >= 2, n_env >= 1, n_samples >= 2 and a positive budget".into(),
            ));
        }
        if b.a_points == 0 {
            return Err(CliError::Config("baseline.a_points must be positive".into()));
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            n_env: m.n_env,
            sigma_d: m.sigma_d,
            sigma_m: m.sigma_m,
            a: m.a,
            b: m.b,
            alpha_phase: m.alpha_phase,
            beta_phase: m.beta_phase,
            seed: m.seed,
        }
    }

    /// Couplings from the inline override, or drawn from the model seed.
    pub fn couplings(&self) -> Result<Couplings, CliError> {
        Ok(match &self.model.couplings {
            Some(c) => match &c.m {
                Some(rows) => Couplings::from_rows(c.d.clone(), rows)?,
                None => Couplings::pure_decoherence(c.d.clone())?,
            },
            None => Couplings::sample(&self.model_params())?,
        })
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        let t = &self.time;
        let grid = match t.scale {
            TimeScale::Log => TimeGrid::logarithmic(t.t_min, t.t_max, t.n_points),
            TimeScale::Linear => TimeGrid::linear(t.t_min, t.t_max, t.n_points),
            TimeScale::List => TimeGrid::new(t.points.clone()),
        };
        grid.map_err(|e| CliError::Config(format!("time: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.time_grid().unwrap().len(), 200);
        assert_eq!(c.model.n_env, 16);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::parse("[model]\nn_env = 4\nsigma_dd = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::Config(_)));
        assert!(msg.contains("sigma_dd") && msg.contains("line 3"), "{msg}");
        assert!(ExperimentConfig::parse("[modle]\n").is_err());
    }

    #[test]
    fn ranges_are_checked() {
        for bad in [
            "[model]\na = 1.5\n",
            "[model]\nsigma_d = -1.0\n",
            "[simulate]\ndeltas = [0.0]\n",
            "[simulate]\nbudget = 0\n",
            "[time]\nscale = \"log\"\nt_min = 0.0\n",
            "[time]\nscale = \"list\"\n",
            "[stats]\nt_min = 5.0\nt_max = 1.0\n",
            "[stats]\nfragment_sizes = [0]\n",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn inline_couplings_override_sampling() {
        let text = "[model]\nn_env = 2\n[model.couplings]\nd = [0.1, 0.2]\nm = [[0.0, 0.01], [0.02, 0.0]]\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let couplings = c.couplings().unwrap();
        assert_eq!(couplings.d(), &[0.1, 0.2]);
        assert_eq!(couplings.m(0, 1), 0.01);
        assert_eq!(couplings.m(1, 0), 0.02);

        let wrong = "[model]\nn_env = 3\n[model.couplings]\nd = [0.1, 0.2]\n";
        assert!(ExperimentConfig::parse(wrong).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "[model]\nn_env = 5\nseed = 9\n[time]\nscale = \"list\"\npoints = [0.0, 1.5]\n[output]\nunit = \"bits\"\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let echoed = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&echoed).unwrap(), c);
    }
}
