use erpo_core::mdp::QTable;
use erpo_core::StochasticPolicy;
use serde::{Deserialize, Serialize};

use crate::{BaselineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    QLearning,
    Sarsa,
    ActorCritic,
    PpoClip,
}

/// Pre-shift knowledge handed to a learner.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    /// Initial action values (TD control).
    pub q: Option<QTable>,
    /// Initial policy (actor-critic, PPO).
    pub policy: Option<StochasticPolicy>,
    /// Initial state values (critics).
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub algo: Algo,
    /// TD step size, or actor step size for policy methods.
    pub alpha: f64,
    pub critic_alpha: f64,
    /// `None` uses the MDP's discount.
    pub gamma: Option<f64>,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the budget over which ε falls linearly.
    pub eps_decay_fraction: f64,
    pub clip: f64,
    pub entropy: f64,
    pub episodes: usize,
    /// Optional step budget; also drives the ε schedule when set.
    pub max_env_steps: Option<u64>,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Episodes per PPO update.
    pub ppo_batch: usize,
    pub ppo_epochs: usize,
    /// Probability floor when turning a warm-start policy into logits.
    pub warm_floor: f64,
    pub seed: u64,
    #[serde(skip)]
    pub warm_start: Option<WarmStart>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            algo: Algo::QLearning,
            alpha: 0.1,
            critic_alpha: 0.1,
            gamma: None,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.5,
            clip: 0.2,
            entropy: 0.0,
            episodes: 1000,
            max_env_steps: None,
            eval_every: 50,
            eval_episodes: 20,
            ppo_batch: 8,
            ppo_epochs: 4,
            warm_floor: 0.01,
            seed: 0,
            warm_start: None,
        }
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> BaselineError {
    BaselineError::Config {
        field,
        reason: reason.into(),
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("alpha", self.alpha), ("critic_alpha", self.critic_alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(field, format!("{v} must be positive")));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(bad("gamma", format!("{g} outside [0, 1]")));
            }
        }
        for (field, v) in [
            ("eps_start", self.eps_start),
            ("eps_end", self.eps_end),
            ("eps_decay_fraction", self.eps_decay_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(field, format!("{v} outside [0, 1]")));
            }
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(bad("clip", format!("{} outside (0, 1)", self.clip)));
        }
        if !(self.entropy >= 0.0) {
            return Err(bad("entropy", "must be non-negative"));
        }
        if !(self.warm_floor > 0.0 && self.warm_floor < 1.0) {
            return Err(bad("warm_floor", "must lie in (0, 1)"));
        }
        for (field, v) in [
            ("episodes", self.episodes),
            ("eval_every", self.eval_every),
            ("ppo_batch", self.ppo_batch),
            ("ppo_epochs", self.ppo_epochs),
        ] {
            if v == 0 {
                return Err(bad(field, "must be at least 1"));
            }
        }
        if self.max_env_steps == Some(0) {
            return Err(bad("max_env_steps", "must be at least 1"));
        }
        Ok(())
    }

    /// Linear ε at training progress `p ∈ [0, 1]`.
    pub fn epsilon_at(&self, p: f64) -> f64 {
        if self.eps_decay_fraction == 0.0 || p >= self.eps_decay_fraction {
            return self.eps_end;
        }
        self.eps_start + (self.eps_end - self.eps_start) * p / self.eps_decay_fraction
    }
}
