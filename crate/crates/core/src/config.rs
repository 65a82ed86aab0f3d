//! Experiment configuration: built-in per-environment defaults, an optional
//! TOML file, and command-line overrides, applied in that order.
//!
//! A config file mirrors [`ExperimentConfig`] with flat keys:
//!
//! ```toml
//! env = "mountaincar-v0"
//! arch = "cheb"          # or "mlp"
//! degree = 4
//! seeds = [0, 1, 2]
//! episodes = 2000
//! learning_rate = 1e-3
//!
//! [[cells]]              # only for sweeps
//! env = "cartpole-v1"
//! arch = "mlp"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, Architecture};
use crate::env::{EnvId, ShapingSpec, DEFAULT_SHAPING_COEFFICIENT};
use crate::error::{Error, Result};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "CHEBDQN_OUT";
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
pub const DEFAULT_DEGREE: usize = 4;

/// Trailing-mean level at which a run counts as solved.
pub fn default_threshold(env: EnvId) -> f64 {
    match env {
        EnvId::CartPole => 195.0,
        EnvId::MountainCar => -110.0,
        EnvId::Acrobot => -100.0,
    }
}

/// Fully resolved settings for one (environment, architecture) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub agent: AgentConfig,
    pub seeds: Vec<u64>,
    /// Trailing window `W` for final scores and thresholds.
    pub window: usize,
    pub threshold: f64,
    /// Shaping coefficient `k`; only valid for Acrobot.
    pub shaping: Option<f64>,
    pub out_dir: PathBuf,
    /// Maximum number of runs executed concurrently.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn defaults_for(env: EnvId, architecture: Architecture) -> Self {
        Self {
            env,
            agent: AgentConfig::defaults_for(env, architecture),
            seeds: DEFAULT_SEEDS.to_vec(),
            window: DEFAULT_WINDOW,
            threshold: default_threshold(env),
            shaping: (env == EnvId::Acrobot).then_some(DEFAULT_SHAPING_COEFFICIENT),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(format!("seeds must be distinct: {:?}", self.seeds)));
        }
        if self.window == 0 {
            return Err(Error::config("metric window must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be at least 1"));
        }
        if !self.threshold.is_finite() {
            return Err(Error::config("threshold must be finite"));
        }
        if let Some(k) = self.shaping {
            if self.env != EnvId::Acrobot {
                return Err(Error::config(format!(
                    "reward shaping is only supported on acrobot-v1, not {}",
                    self.env
                )));
            }
            ShapingSpec::new(k, self.agent.gamma)?;
        }
        Ok(())
    }

    pub fn shaping_spec(&self) -> Option<ShapingSpec> {
        self.shaping.map(|coefficient| ShapingSpec {
            coefficient,
            gamma: self.agent.gamma,
        })
    }

    /// File stem of one run's outputs, e.g. `cartpole-v1__cheb4__seed0`.
    pub fn run_stem(&self, seed: u64) -> String {
        format!("{}__{}__seed{seed}", self.env, self.agent.architecture.label())
    }
}

/// One grid entry of a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub env: String,
    pub arch: String,
    pub degree: Option<usize>,
}

/// Partially specified settings, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub env: Option<String>,
    pub arch: Option<String>,
    pub degree: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub window: Option<usize>,
    pub threshold: Option<f64>,
    pub shaping: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub gamma: Option<f64>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub buffer_capacity: Option<usize>,
    pub target_update: Option<u64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_end: Option<f64>,
    pub epsilon_decay_steps: Option<u64>,
    pub warmup: Option<usize>,
    pub episodes: Option<usize>,
    pub max_steps: Option<usize>,
    pub bootstrap_on_truncation: Option<bool>,
    pub grad_clip: Option<f64>,
    pub cells: Option<Vec<CellSpec>>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid config file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ConfigLayer) -> Self {
        overlay_fields!(self, top;
            env, arch, degree, seeds, window, threshold, shaping, out, jobs, hidden,
            gamma, learning_rate, batch_size, buffer_capacity, target_update,
            epsilon_start, epsilon_end, epsilon_decay_steps, warmup, episodes,
            max_steps, bootstrap_on_truncation, grad_clip, cells,
        );
        self
    }

    /// Resolves the single experiment described by the top-level keys.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let env = self
            .env
            .as_deref()
            .ok_or_else(|| Error::config("no environment given (set `env` or pass --env)"))?;
        self.resolve_cell(env, self.arch.as_deref(), self.degree)
    }

    /// Resolves every `[[cells]]` entry against the shared keys.
    pub fn resolve_cells(&self) -> Result<Vec<ExperimentConfig>> {
        let cells = self.cells.as_deref().unwrap_or_default();
        if cells.is_empty() {
            return Err(Error::config("sweep config lists no [[cells]]"));
        }
        cells
            .iter()
            .map(|c| self.resolve_cell(&c.env, Some(&c.arch), c.degree))
            .collect()
    }

    fn resolve_cell(
        &self,
        env: &str,
        arch: Option<&str>,
        degree: Option<usize>,
    ) -> Result<ExperimentConfig> {
        let env: EnvId = env.parse()?;
        let architecture = parse_architecture(arch.unwrap_or("cheb"), degree)?;
        let mut cfg = ExperimentConfig::defaults_for(env, architecture);
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.shaping {
            cfg.shaping = Some(v);
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        let a = &mut cfg.agent;
        if let Some(v) = &self.hidden {
            a.hidden = v.clone();
        }
        if let Some(v) = self.gamma {
            a.gamma = v;
        }
        if let Some(v) = self.learning_rate {
            a.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            a.batch_size = v;
        }
        if let Some(v) = self.buffer_capacity {
            a.buffer_capacity = v;
        }
        if let Some(v) = self.target_update {
            a.target_update = v;
        }
        if let Some(v) = self.epsilon_start {
            a.epsilon.start = v;
        }
        if let Some(v) = self.epsilon_end {
            a.epsilon.end = v;
        }
        if let Some(v) = self.epsilon_decay_steps {
            a.epsilon.decay_steps = v;
        }
        if let Some(v) = self.warmup {
            a.warmup = v;
        }
        if let Some(v) = self.episodes {
            a.episodes = v;
        }
        if let Some(v) = self.max_steps {
            a.max_steps = v;
        }
        if let Some(v) = self.bootstrap_on_truncation {
            a.bootstrap_on_truncation = v;
        }
        if self.grad_clip.is_some() {
            a.grad_clip = self.grad_clip;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `arch` is `mlp` or `cheb`; `degree` only makes sense for `cheb`.
pub fn parse_architecture(arch: &str, degree: Option<usize>) -> Result<Architecture> {
    match (arch, degree) {
        ("mlp", None) => Ok(Architecture::Mlp),
        ("mlp", Some(_)) => Err(Error::usage(
            "--degree only applies to the Chebyshev architecture",
        )),
        ("cheb", d) => Ok(Architecture::Chebyshev {
            degree: d.unwrap_or(DEFAULT_DEGREE),
        }),
        (other, _) => Err(Error::usage(format!(
            "unknown architecture `{other}` (expected mlp or cheb)"
        ))),
    }
}
