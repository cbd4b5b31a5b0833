//! Experiment configuration.
//!
//! A TOML file; every key is optional and falls back to the preset of the
//! chosen experiment. Example:
//!
//! ```toml
//! experiment = "synthetic_lapse"   # synthetic_lapse | synthetic_violation | cartpole
//! n_users = 10
//! n_channels = 2
//! slots = 1000000                  # synthetic experiments
//! episodes = 2000                  # cartpole, per seed
//! policies = ["round_robin", "aoi_index", "aoi_weight_index", "lapse_index", "context_lapse_index"]
//! out = "results"
//! chart = true
//!
//! [p]                              # or: values = [0.9, 0.95, ...]
//! start = 0.9
//! end = 1.0
//!
//! [seeds]                          # or: list = [1, 2, 3]
//! count = 20
//! base = 1
//!
//! [increment]
//! kind = "gaussian"                # gaussian | two_point | point_mass
//! sigma = 1.0
//!
//! [weight]
//! kind = "two_point"
//! low = 1.0
//! high = 9.0
//! p_high = 0.05
//!
//! [[thresholds]]
//! weight = 1.0
//! threshold = 15.0
//!
//! [[thresholds]]
//! weight = 9.0
//! threshold = 5.0
//!
//! [cartpole]
//! disturbance_sigma = 10.0
//! calibration_episodes = 500
//! calibration_seed = 7
//! gains = [0.05, 0.0, 1.0, 0.2]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lapse_core::cartpole::{LinearSignController, DISTURBANCE_SIGMA};
use lapse_core::model::arithmetic_probabilities;
use lapse_core::parallel::seed_range;
use lapse_core::{DistSpec, IncrementDist, PolicyKind, SystemParams, ThresholdRule, WeightDist};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SyntheticLapse,
    SyntheticViolation,
    Cartpole,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SyntheticLapse => "synthetic_lapse",
            Experiment::SyntheticViolation => "synthetic_violation",
            Experiment::Cartpole => "cartpole",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "synthetic_lapse" => Ok(Experiment::SyntheticLapse),
            "synthetic_violation" => Ok(Experiment::SyntheticViolation),
            "cartpole" => Ok(Experiment::Cartpole),
            other => Err(CliError::config("experiment", format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistConfig {
    Gaussian { sigma: f64 },
    TwoPoint { low: f64, high: f64, p_high: f64 },
    PointMass { value: f64 },
}

impl From<DistConfig> for DistSpec {
    fn from(d: DistConfig) -> Self {
        match d {
            DistConfig::Gaussian { sigma } => DistSpec::Gaussian { sigma },
            DistConfig::TwoPoint { low, high, p_high } => DistSpec::TwoPoint { low, high, p_high },
            DistConfig::PointMass { value } => DistSpec::PointMass { value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PSpec {
    Values { values: Vec<f64> },
    Arithmetic { start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SeedSpec {
    List { list: Vec<u64> },
    Range { count: usize, #[serde(default = "default_base")] base: u64 },
}

fn default_base() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub weight: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartpoleSection {
    pub disturbance_sigma: Option<f64>,
    pub calibration_episodes: Option<usize>,
    pub calibration_seed: Option<u64>,
    pub gains: Option<[f64; 4]>,
}

/// The file as written; unset keys take preset values.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub n_users: Option<usize>,
    pub n_channels: Option<usize>,
    pub p: Option<PSpec>,
    pub increment: Option<DistConfig>,
    pub weight: Option<DistConfig>,
    pub slots: Option<u64>,
    pub episodes: Option<usize>,
    pub seeds: Option<SeedSpec>,
    pub policies: Option<Vec<String>>,
    pub thresholds: Option<Vec<ThresholdConfig>>,
    pub out: Option<PathBuf>,
    pub chart: Option<bool>,
    pub cartpole: Option<CartpoleSection>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleSettings {
    pub disturbance_sigma: f64,
    pub calibration_episodes: usize,
    pub calibration_seed: u64,
    pub gains: [f64; 4],
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_users: usize,
    pub n_channels: usize,
    pub p: Vec<f64>,
    pub increment: DistSpec,
    pub weight: DistSpec,
    pub slots: u64,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    pub thresholds: Vec<(f64, f64)>,
    pub out: PathBuf,
    pub chart: bool,
    pub cartpole: CartpoleSettings,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub slots: Option<u64>,
    pub episodes: Option<usize>,
    pub policies: Vec<String>,
    pub out: Option<PathBuf>,
    pub no_chart: bool,
}

impl ExperimentConfig {
    /// Defaults of the given experiment.
    pub fn preset(experiment: Experiment) -> Self {
        Self::resolve(
            RawConfig {
                experiment: Some(experiment),
                ..RawConfig::default()
            },
            &Overrides::default(),
        )
        .expect("presets are valid")
    }

    pub fn resolve(raw: RawConfig, over: &Overrides) -> Result<Self, CliError> {
        let experiment = over
            .experiment
            .or(raw.experiment)
            .unwrap_or(Experiment::SyntheticLapse);
        let n_users = raw.n_users.unwrap_or(10);
        if n_users == 0 {
            return Err(CliError::config("n_users", "must be positive"));
        }
        let n_channels = raw.n_channels.unwrap_or(2);
        if n_channels == 0 {
            return Err(CliError::config("n_channels", "must be positive"));
        }
        let p = match raw.p.unwrap_or(PSpec::Arithmetic { start: 0.9, end: 1.0 }) {
            PSpec::Values { values } => values,
            PSpec::Arithmetic { start, end } => arithmetic_probabilities(n_users, start, end),
        };
        if p.len() != n_users {
            return Err(CliError::config(
                "p",
                format!("{} probabilities for {n_users} users", p.len()),
            ));
        }
        let slots = over.slots.or(raw.slots).unwrap_or(match experiment {
            Experiment::SyntheticViolation => 10_000_000,
            _ => 1_000_000,
        });
        if slots == 0 {
            return Err(CliError::config("slots", "must be positive"));
        }
        let episodes = over.episodes.or(raw.episodes).unwrap_or(2000);
        if episodes == 0 {
            return Err(CliError::config("episodes", "must be positive"));
        }

        let mut seeds = match raw.seeds {
            Some(SeedSpec::List { list }) => list,
            Some(SeedSpec::Range { count, base }) => seed_range(base, count),
            None => seed_range(1, if experiment == Experiment::Cartpole { 5 } else { 20 }),
        };
        if over.seed.is_some() || over.seeds.is_some() {
            let base = over.seed.or(seeds.first().copied()).unwrap_or(1);
            let count = over.seeds.unwrap_or(if over.seed.is_some() { 1 } else { seeds.len() });
            seeds = seed_range(base, count);
        }
        if seeds.is_empty() {
            return Err(CliError::config("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(CliError::config("seeds", "seeds must be distinct"));
        }

        let names = if !over.policies.is_empty() {
            over.policies.clone()
        } else {
            raw.policies
                .unwrap_or_else(|| PolicyKind::ALL.iter().map(|k| k.name().to_string()).collect())
        };
        let mut policies = Vec::new();
        for name in names.iter().flat_map(|n| n.split(',')).filter(|n| !n.trim().is_empty()) {
            let kind: PolicyKind = name
                .parse()
                .map_err(|_| CliError::config("policy", format!("unknown policy `{}`", name.trim())))?;
            if !policies.contains(&kind) {
                policies.push(kind);
            }
        }
        if policies.is_empty() {
            return Err(CliError::config("policies", "at least one policy is required"));
        }
        policies.sort();

        let thresholds: Vec<(f64, f64)> = raw
            .thresholds
            .map(|t| t.iter().map(|c| (c.weight, c.threshold)).collect())
            .unwrap_or_else(|| ThresholdRule::standard().classes().to_vec());
        ThresholdRule::new(thresholds.clone()).map_err(|e| CliError::config("thresholds", e))?;

        let cp = raw.cartpole.unwrap_or_default();
        let cartpole = CartpoleSettings {
            disturbance_sigma: cp.disturbance_sigma.unwrap_or(DISTURBANCE_SIGMA),
            calibration_episodes: cp.calibration_episodes.unwrap_or(500),
            calibration_seed: cp.calibration_seed.unwrap_or(7),
            gains: cp.gains.unwrap_or(LinearSignController::DEFAULT_GAINS),
        };
        if !(cartpole.disturbance_sigma >= 0.0 && cartpole.disturbance_sigma.is_finite()) {
            return Err(CliError::config("cartpole.disturbance_sigma", "must be nonnegative"));
        }

        let config = Self {
            experiment,
            n_users,
            n_channels,
            p,
            increment: raw.increment.map(Into::into).unwrap_or(DistSpec::standard_gaussian()),
            weight: raw.weight.map(Into::into).unwrap_or(DistSpec::two_level_weights()),
            slots,
            episodes,
            seeds,
            policies,
            thresholds,
            out: over
                .out
                .clone()
                .or(raw.out)
                .unwrap_or_else(|| PathBuf::from("results").join(experiment.name())),
            chart: raw.chart.unwrap_or(true) && !over.no_chart,
            cartpole,
        };
        if experiment != Experiment::Cartpole {
            config.system_params()?;
        } else if let Some(p) = config.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(CliError::config("p", format!("{p} is outside [0, 1]")));
        }
        Ok(config)
    }

    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        let inc = IncrementDist::new(self.increment).map_err(|e| CliError::config("increment", e))?;
        let w = WeightDist::new(self.weight).map_err(|e| CliError::config("weight", e))?;
        let params = SystemParams::homogeneous(self.n_channels, self.p.clone(), inc, w)
            .map_err(|e| CliError::config("p", e))?;
        if params.a2_moment().iter().any(|m| *m <= 0.0) {
            return Err(CliError::config("increment", "increments need positive variance"));
        }
        Ok(params)
    }

    pub fn threshold_rule(&self) -> ThresholdRule {
        ThresholdRule::new(self.thresholds.clone()).expect("validated")
    }
}
