//! Experiment definitions and their JSON form.
//!
//! A config file is a JSON object with exactly the fields of
//! [`ExperimentSpec`]; unknown keys are rejected.
//!
//! ```json
//! {
//!   "arms": 100,
//!   "arm_law": { "uniform": { "lo": 0.8, "hi": 1.0 } },
//!   "mu": 0.9,
//!   "epsilon": 0.05,
//!   "alpha": [0.01, 0.05, 0.1, 0.3],
//!   "replications": 16,
//!   "horizon": 100000,
//!   "master_seed": 1,
//!   "algorithm": "relaxed"
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safety_inspector_core::SafetyConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// A scalar or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    Many(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::One(v) => vec![*v],
            Grid::Many(v) => v.clone(),
        }
    }
}

impl From<f64> for Grid {
    fn from(v: f64) -> Self {
        Grid::One(v)
    }
}

impl From<Vec<f64>> for Grid {
    fn from(v: Vec<f64>) -> Self {
        if v.len() == 1 {
            Grid::One(v[0])
        } else {
            Grid::Many(v)
        }
    }
}

/// How the hidden arm means are chosen for each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmLaw {
    Explicit(Vec<f64>),
    /// Independent `U(lo, hi)` draws.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Uniform,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Flawless,
    Relaxed,
    Filtered { policy: PolicyName },
}

fn default_checkpoints() -> u64 {
    200
}

fn default_bins() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub arms: usize,
    pub arm_law: ArmLaw,
    /// Required unless the algorithm is `flawless`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Grid>,
    pub replications: usize,
    pub horizon: u64,
    pub master_seed: u64,
    pub algorithm: AlgorithmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Number of points on each curve.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: u64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Also write the per-step trace of replication 0 at every grid point.
    #[serde(default)]
    pub record_trace: bool,
}

/// One `(mu, epsilon, alpha)` combination; `config` is `None` for the
/// flawless inspector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub config: Option<SafetyConfig>,
}

impl GridPoint {
    pub fn mu(&self) -> f64 {
        self.config.map_or(1.0, |c| c.mu())
    }

    pub fn epsilon(&self) -> f64 {
        self.config.map_or(0.0, |c| c.epsilon())
    }

    pub fn alpha(&self) -> Option<f64> {
        self.config.map(|c| c.alpha())
    }
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SimError::ConfigRead {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| SimError::ConfigParse {
            path: path.to_owned(),
            source,
        })
    }

    /// Three identical `mu_n = 0.8` arms under `(0.9, 0.02, 0.05)`, one run.
    pub fn single_test_demo() -> Self {
        Self {
            arms: 3,
            arm_law: ArmLaw::Explicit(vec![0.8; 3]),
            mu: Some(0.9.into()),
            epsilon: Some(0.02.into()),
            alpha: Some(0.05.into()),
            replications: 1,
            horizon: 100_000,
            master_seed: 7,
            algorithm: AlgorithmSpec::Relaxed,
            output: None,
            workers: None,
            checkpoints: default_checkpoints(),
            histogram_bins: default_bins(),
            record_trace: true,
        }
    }

    /// Transient experiment at desk scale: 100 arms from `U(0.8, 1)`,
    /// `mu = 0.9`, `epsilon = 0.05`, four error levels, 16 replications.
    pub fn transient_desk() -> Self {
        Self {
            arms: 100,
            arm_law: ArmLaw::Uniform { lo: 0.8, hi: 1.0 },
            mu: Some(0.9.into()),
            epsilon: Some(0.05.into()),
            alpha: Some(vec![0.01, 0.05, 0.1, 0.3].into()),
            replications: 16,
            horizon: 100_000,
            master_seed: 1,
            algorithm: AlgorithmSpec::Relaxed,
            output: None,
            workers: None,
            checkpoints: default_checkpoints(),
            histogram_bins: default_bins(),
            record_trace: false,
        }
    }

    /// Steady-state sweep over `epsilon x alpha` at desk scale.
    pub fn sweep_desk() -> Self {
        Self {
            epsilon: Some(vec![0.01, 0.02, 0.05, 0.09].into()),
            alpha: Some(vec![0.01, 0.05, 0.1].into()),
            master_seed: 2,
            ..Self::transient_desk()
        }
    }

    /// Checks every field and expands the grid.
    pub fn grid_points(&self) -> Result<Vec<GridPoint>> {
        if self.arms == 0 {
            return Err(config_err("`arms` must be at least 1"));
        }
        if self.replications == 0 {
            return Err(config_err("`replications` must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(config_err("`horizon` must be at least 1"));
        }
        if self.checkpoints == 0 {
            return Err(config_err("`checkpoints` must be at least 1"));
        }
        if self.histogram_bins == 0 {
            return Err(config_err("`histogram_bins` must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(config_err("`workers` must be at least 1"));
        }
        match &self.arm_law {
            ArmLaw::Explicit(values) => {
                if values.len() != self.arms {
                    return Err(config_err(format!(
                        "`arm_law.explicit` lists {} means but `arms` is {}",
                        values.len(),
                        self.arms
                    )));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(config_err(format!(
                        "`arm_law.explicit` value {v} is outside [0, 1]"
                    )));
                }
            }
            ArmLaw::Uniform { lo, hi } => {
                if !(0.0 <= *lo && lo < hi && *hi <= 1.0) {
                    return Err(config_err(format!(
                        "`arm_law.uniform` needs 0 <= lo < hi <= 1, got lo = {lo}, hi = {hi}"
                    )));
                }
            }
        }
        if self.algorithm == AlgorithmSpec::Flawless {
            return Ok(vec![GridPoint { config: None }]);
        }
        let grid = |name: &str, g: &Option<Grid>| -> Result<Vec<f64>> {
            let values = g
                .as_ref()
                .ok_or_else(|| config_err(format!("`{name}` is required for this algorithm")))?
                .values();
            if values.is_empty() {
                return Err(config_err(format!("`{name}` grid is empty")));
            }
            Ok(values)
        };
        let (mus, epss, alphas) = (
            grid("mu", &self.mu)?,
            grid("epsilon", &self.epsilon)?,
            grid("alpha", &self.alpha)?,
        );
        let mut points = Vec::with_capacity(mus.len() * epss.len() * alphas.len());
        for &mu in &mus {
            for &eps in &epss {
                for &alpha in &alphas {
                    let config = SafetyConfig::new(mu, eps, alpha).map_err(|e| {
                        config_err(format!(
                            "grid point (mu = {mu}, epsilon = {eps}, alpha = {alpha}): {e}"
                        ))
                    })?;
                    points.push(GridPoint {
                        config: Some(config),
                    });
                }
            }
        }
        Ok(points)
    }

    /// Arm means of one replication, drawn from `seed`.
    pub fn draw_means(&self, seed: u64) -> Vec<f64> {
        match &self.arm_law {
            ArmLaw::Explicit(values) => values.clone(),
            ArmLaw::Uniform { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.arms).map(|_| rng.gen_range(*lo..*hi)).collect()
            }
        }
    }
}
