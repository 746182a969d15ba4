//! Experiment configuration: a TOML file with documented keys, overridable
//! from the command line.
//!
//! ```toml
//! seed = 2015
//! parallel = true
//!
//! [network]
//! algorithms = ["all", "de-all", "fractional-all"]
//! sensors = 10
//! mu = 0.2
//! h = 20.0            # `inf` disables truncation
//! skip_prob = 0.35    # fractional-all only
//! stride = 1          # every-nth only
//! pair = { theta0 = 0.0, theta1 = 0.4, sigma = 1.0 }
//! # pairs = [...]     # optional per-sensor models, overrides `pair`/`sensors`
//! # shares = [...]    # optional threshold shares d_l
//!
//! [grid]
//! alphas = [1e-3, 1e-4]   # or: thresholds = [2.0, 5.0]
//!
//! [trials]
//! delay = 20000
//! far = 2000
//! pdc = 1000
//! pdc_horizon = 100000
//! # far_max_steps = 20000   # default 50/alpha
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fusion::{Algorithm, NetworkPolicy, PolicyError};
use crate::metrics::{self, far_budget};
use crate::models::DistributionPair;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{0}")]
    Invalid(String),
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub algorithms: Vec<Algorithm>,
    pub sensors: usize,
    pub mu: f64,
    pub h: f64,
    #[serde(default)]
    pub skip_prob: f64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    pub pair: DistributionPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<DistributionPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<Vec<f64>>,
    #[serde(default)]
    pub allow_unnormalized_shares: bool,
}

fn default_stride() -> u64 {
    1
}

impl NetworkSpec {
    /// Per-sensor observation models.
    pub fn sensor_pairs(&self) -> Vec<DistributionPair> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => vec![self.pair; self.sensors],
        }
    }

    pub fn sensor_count(&self) -> usize {
        self.pairs.as_ref().map_or(self.sensors, Vec::len)
    }

    /// The policy for `algorithm` at global threshold `threshold`.
    pub fn policy(&self, algorithm: Algorithm, threshold: f64) -> Result<NetworkPolicy, PolicyError> {
        let sensors: Vec<_> = self.sensor_pairs().into_iter().map(|p| (p, self.mu, self.h)).collect();
        let mut policy = NetworkPolicy::new(algorithm, &sensors, threshold)?;
        if algorithm == Algorithm::FractionalAll {
            policy = policy.with_skip_prob(self.skip_prob)?;
        }
        if algorithm == Algorithm::EveryNth {
            policy = policy.with_stride(self.stride)?;
        }
        if let Some(shares) = &self.shares {
            policy = policy.with_shares(shares, self.allow_unnormalized_shares)?;
        }
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

/// One grid point: the global threshold, and the alpha it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: Option<f64>,
    pub threshold: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.alphas, &self.thresholds) {
            (Some(_), Some(_)) => {
                Err(ConfigError::Invalid("give either an alpha grid or a threshold grid, not both".into()))
            }
            (None, None) => Err(ConfigError::Invalid("an alpha grid or a threshold grid is required".into())),
            (Some(a), None) => {
                if a.is_empty() {
                    return Err(ConfigError::Invalid("alpha grid is empty".into()));
                }
                match a.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
                    Some(v) => Err(ConfigError::Invalid(format!("alpha {v} is outside (0, 1)"))),
                    None => Ok(()),
                }
            }
            (None, Some(t)) => {
                if t.is_empty() {
                    return Err(ConfigError::Invalid("threshold grid is empty".into()));
                }
                match t.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
                    Some(v) => Err(ConfigError::Invalid(format!("threshold {v} must be finite and >= 0"))),
                    None => Ok(()),
                }
            }
        }
    }

    /// Grid points in the given order; alphas map to `A = |log alpha|`.
    pub fn points(&self) -> Vec<GridPoint> {
        if let Some(a) = &self.alphas {
            a.iter().map(|&alpha| GridPoint { alpha: Some(alpha), threshold: alpha.ln().abs() }).collect()
        } else {
            self.thresholds.iter().flatten().map(|&threshold| GridPoint { alpha: None, threshold }).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    pub delay: u64,
    pub far: u64,
    pub pdc: u64,
    pub pdc_horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_max_steps: Option<u64>,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            delay: metrics::DEFAULT_DELAY_TRIALS,
            far: metrics::DEFAULT_FAR_TRIALS,
            pdc: metrics::DEFAULT_PDC_TRIALS,
            pdc_horizon: metrics::DEFAULT_PDC_HORIZON,
            far_max_steps: None,
        }
    }
}

impl TrialSpec {
    /// FAR budget at a grid point: the explicit cap if set, else `50/alpha`,
    /// else (threshold grids) `50 e^A`.
    pub fn far_max_steps_at(&self, point: &GridPoint) -> u64 {
        if let Some(m) = self.far_max_steps {
            return m;
        }
        let alpha = point.alpha.unwrap_or_else(|| (-point.threshold).exp());
        far_budget(alpha.max(1e-12))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub parallel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub network: NetworkSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub trials: TrialSpec,
}

impl ExperimentConfig {
    /// L = 10 sensors, `N(0,1) -> N(0.4,1)`, `mu = 0.2`, `h = 20`, comparing
    /// ALL, DE-All and fractional sampling with 35% random skips.
    pub fn fig2_preset() -> Self {
        Self {
            seed: Some(crate::experiment::DEFAULT_FIG2_SEED),
            parallel: true,
            output: None,
            network: NetworkSpec {
                algorithms: vec![Algorithm::All, Algorithm::DeAll, Algorithm::FractionalAll],
                sensors: 10,
                mu: 0.2,
                h: 20.0,
                skip_prob: 0.35,
                stride: 1,
                pair: DistributionPair::gaussian(0.0, 0.4, 1.0).expect("valid pair"),
                pairs: None,
                shares: None,
                allow_unnormalized_shares: false,
            },
            grid: GridSpec { alphas: Some(vec![1e-3, 1e-4, 1e-5, 1e-6]), thresholds: None },
            trials: TrialSpec { far: 200, far_max_steps: Some(20_000), ..TrialSpec::default() },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Checks everything except the grid, which only sweeps need.
    pub fn validate_network(&self) -> Result<(), ConfigError> {
        let n = &self.network;
        if n.algorithms.is_empty() {
            return Err(ConfigError::Invalid("no algorithm selected".into()));
        }
        if n.sensor_count() == 0 {
            return Err(ConfigError::Policy(PolicyError::NoSensors));
        }
        if let Some(p) = &n.pairs {
            if n.sensors != 0 && n.sensors != p.len() {
                return Err(ConfigError::Invalid(format!(
                    "sensors = {} but {} per-sensor pairs were given",
                    n.sensors,
                    p.len()
                )));
            }
        }
        for &alg in &n.algorithms {
            n.policy(alg, 0.0)?;
        }
        let t = &self.trials;
        if t.delay == 0 || t.far == 0 || t.pdc == 0 {
            return Err(ConfigError::Invalid("trial counts must be >= 1".into()));
        }
        if t.pdc_horizon < 10 {
            return Err(ConfigError::Invalid("pdc_horizon must be >= 10".into()));
        }
        if t.far_max_steps == Some(0) {
            return Err(ConfigError::Invalid("far_max_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_network()?;
        self.grid.validate()
    }

    /// The seed, which batch commands require.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| ConfigError::Invalid("a seed is required (set `seed` or pass --seed)".into()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization,
    /// ignoring the seed (reported separately), output path and scheduling.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.seed = None;
        canonical.output = None;
        canonical.parallel = true;
        let text = canonical.to_toml().expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}
