//! Experiment configuration, read from TOML or JSON.
//!
//! ```toml
//! seeds = [0, 1, 2, 3, 4]
//! budget = 1000000          # environment steps per run
//! eval_every = 10000        # default: budget / 100
//! eval_episodes = 20
//! threshold = 0.9           # fraction of the oracle optimum
//! output_dir = "results"    # ERPO_OUTPUT_DIR overrides
//!
//! [env]
//! family = "FL"
//! levels = ["L1", "L2"]
//!
//! [[algos]]
//! kind = "erpo"
//! [algos.erpo]
//! batch_size = 64
//!
//! [[algos]]
//! kind = "q_learning"
//! warm_start = true         # start from the pre-shift optimum
//! [algos.baseline]
//! alpha = 0.2
//! ```

use std::path::{Path, PathBuf};

use erpo_baselines::{Algo, BaselineConfig};
use erpo_core::erpo::ErpoConfig;
use erpo_envs::{Family, Level};
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const OUTPUT_DIR_ENV: &str = "ERPO_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoKind {
    Erpo,
    QLearning,
    Sarsa,
    ActorCritic,
    PpoClip,
}

impl AlgoKind {
    pub fn code(self) -> &'static str {
        match self {
            AlgoKind::Erpo => "erpo",
            AlgoKind::QLearning => "q_learning",
            AlgoKind::Sarsa => "sarsa",
            AlgoKind::ActorCritic => "actor_critic",
            AlgoKind::PpoClip => "ppo_clip",
        }
    }

    pub fn baseline(self) -> Option<Algo> {
        match self {
            AlgoKind::Erpo => None,
            AlgoKind::QLearning => Some(Algo::QLearning),
            AlgoKind::Sarsa => Some(Algo::Sarsa),
            AlgoKind::ActorCritic => Some(Algo::ActorCritic),
            AlgoKind::PpoClip => Some(Algo::PpoClip),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub family: Family,
    pub levels: Vec<Level>,
    /// Placement seed passed to `build_env`.
    #[serde(default)]
    pub instance_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoSpec {
    pub kind: AlgoKind,
    /// Name in outputs; derived from kind and flags when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Baselines: initialise from the pre-shift optimum.
    #[serde(default)]
    pub warm_start: bool,
    /// Baselines: train on a freshly sampled level each episode.
    #[serde(default)]
    pub randomize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erpo: Option<ErpoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
}

impl AlgoSpec {
    pub fn new(kind: AlgoKind) -> Self {
        Self {
            kind,
            label: None,
            warm_start: false,
            randomize: false,
            erpo: None,
            baseline: None,
        }
    }

    pub fn warm(mut self) -> Self {
        self.warm_start = true;
        self
    }

    pub fn randomized(mut self) -> Self {
        self.randomize = true;
        self
    }

    pub fn name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut s = self.kind.code().to_string();
        if self.warm_start {
            s.push_str("_b");
        }
        if self.randomize {
            s.push_str("_dr");
        }
        s
    }

    pub fn erpo_config(&self) -> ErpoConfig {
        self.erpo.clone().unwrap_or_default()
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let mut c = self.baseline.clone().unwrap_or_default();
        if let Some(a) = self.kind.baseline() {
            c.algo = a;
        }
        c
    }
}

fn default_eval_episodes() -> usize {
    20
}

fn default_threshold() -> f64 {
    0.9
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<u64>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fill `wall_ms`; outputs are then no longer byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    pub env: EnvSpec,
    pub algos: Vec<AlgoSpec>,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> BenchError {
    BenchError::Config {
        field,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Evaluation cadence in environment steps.
    pub fn cadence(&self) -> u64 {
        self.eval_every.unwrap_or((self.budget / 100).max(1))
    }

    /// Fills defaults and checks every field.
    pub fn validate(&mut self) -> Result<(), BenchError> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if self.algos.is_empty() {
            return Err(invalid("algos", "at least one algorithm is required"));
        }
        if self.env.levels.is_empty() {
            return Err(invalid("levels", "at least one level is required"));
        }
        if self.env.family == Family::ReachAvoid {
            return Err(invalid("family", "use the `grid` command for reach-avoid grids"));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be positive"));
        }
        let cadence = self.cadence();
        if cadence == 0 || cadence > self.budget {
            return Err(invalid("eval_every", format!("{cadence} must lie in [1, budget]")));
        }
        self.eval_every = Some(cadence);
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(invalid("threshold", format!("{} outside (0, 1]", self.threshold)));
        }
        let mut names = std::collections::BTreeSet::new();
        for spec in &mut self.algos {
            match spec.kind {
                AlgoKind::Erpo => {
                    if spec.baseline.is_some() || spec.warm_start || spec.randomize {
                        return Err(invalid("algos", "erpo takes only an [erpo] table"));
                    }
                    let cfg = spec.erpo.get_or_insert_with(ErpoConfig::default);
                    cfg.validate().map_err(|e| match e {
                        erpo_core::Error::Config { field, reason } => invalid(field, reason),
                        other => BenchError::Core(other),
                    })?;
                }
                _ => {
                    if spec.erpo.is_some() {
                        return Err(invalid("algos", format!("{} takes a [baseline] table", spec.kind.code())));
                    }
                    let cfg = spec.baseline_config();
                    cfg.validate().map_err(|e| match e {
                        erpo_baselines::BaselineError::Config { field, reason } => invalid(field, reason),
                        other => BenchError::Baseline(other),
                    })?;
                    spec.baseline = Some(cfg);
                }
            }
            if !names.insert(spec.name()) {
                return Err(invalid("label", format!("duplicate algorithm name {}", spec.name())));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, BenchError> {
        let mut cfg: Self = if json {
            serde_json::from_str(text).map_err(|e| BenchError::Parse {
                line: e.line(),
                msg: e.to_string(),
            })?
        } else {
            toml::from_str(text).map_err(|e| {
                let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
                BenchError::Parse {
                    line,
                    msg: e.message().to_string(),
                }
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    /// Output directory after applying the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

/// Reads a config; `.json` files are parsed as JSON, anything else as TOML.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    ExperimentConfig::parse(&text, json)
}
