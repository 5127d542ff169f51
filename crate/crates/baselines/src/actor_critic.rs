//! One-step advantage actor-critic over tabular softmax logits.

use erpo_core::erpo::reward_scale;
use erpo_core::rng::Rng;
use erpo_core::{StochasticPolicy, TabularMdp};

use crate::config::BaselineConfig;
use crate::{logits_from_policy, softmax_row, BaselineError, EpisodicLearner, Result};

#[derive(Debug, Clone)]
pub struct ActorCritic {
    cfg: BaselineConfig,
    num_actions: usize,
    logits: Vec<f64>,
    values: Vec<f64>,
    gamma: f64,
    /// TD errors are divided by this before reaching the actor.
    scale: f64,
    steps: u64,
    episodes: u64,
}

pub(crate) fn warm_parts(
    mdp: &TabularMdp,
    cfg: &BaselineConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let warm = cfg.warm_start.clone().unwrap_or_default();
    let logits = match warm.policy {
        Some(pi) => {
            if pi.num_states() != n || pi.num_actions() != m {
                return Err(BaselineError::Config {
                    field: "warm_start",
                    reason: format!("policy is {}x{}, MDP is {n}x{m}", pi.num_states(), pi.num_actions()),
                });
            }
            logits_from_policy(&pi, cfg.warm_floor)
        }
        None => vec![0.0; n * m],
    };
    let values = match warm.values {
        Some(v) if v.len() != n => {
            return Err(BaselineError::Config {
                field: "warm_start",
                reason: format!("{} values for {n} states", v.len()),
            })
        }
        Some(v) => v,
        None => vec![0.0; n],
    };
    Ok((logits, values))
}

/// Adds `lr · (coef · (e_a − π) + entropy · ∇H)` to one row of logits.
pub(crate) fn policy_gradient_step(logits: &mut [f64], probs: &[f64], a: usize, coef: f64, lr: f64, entropy: f64) {
    let h: f64 = -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
    for (b, l) in logits.iter_mut().enumerate() {
        let ind = if b == a { 1.0 } else { 0.0 };
        let mut g = coef * (ind - probs[b]);
        if entropy > 0.0 && probs[b] > 0.0 {
            g -= entropy * probs[b] * (probs[b].ln() + h);
        }
        *l += lr * g;
    }
}

impl ActorCritic {
    pub fn new(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<Self> {
        let (logits, values) = warm_parts(mdp, cfg)?;
        let scale = reward_scale(mdp).max(1.0);
        Ok(Self {
            cfg: cfg.clone(),
            num_actions: mdp.num_actions(),
            logits,
            values,
            gamma: cfg.gamma.unwrap_or(mdp.discount()),
            scale,
            steps: 0,
            episodes: 0,
        })
    }
}

impl EpisodicLearner for ActorCritic {
    fn train_episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> u64 {
        let m = self.num_actions;
        let mut probs = vec![0.0; m];
        let mut s = mdp.sample_start(rng);
        let mut taken = 0;
        for t in 0..mdp.horizon() {
            if mdp.is_absorbing(s) {
                break;
            }
            let row = s * m..(s + 1) * m;
            softmax_row(&self.logits[row.clone()], &mut probs);
            let a = erpo_core::rng::sample_index(&probs, rng);
            let (next, r) = mdp.step(s, a, t, rng);
            taken += 1;
            let boot = if mdp.is_absorbing(next) { 0.0 } else { self.values[next] };
            let delta = r + self.gamma * boot - self.values[s];
            self.values[s] += self.cfg.critic_alpha * delta;
            policy_gradient_step(
                &mut self.logits[row],
                &probs,
                a,
                delta / self.scale,
                self.cfg.alpha,
                self.cfg.entropy,
            );
            s = next;
        }
        self.steps += taken;
        self.episodes += 1;
        taken
    }

    fn policy(&self) -> StochasticPolicy {
        StochasticPolicy::softmax(self.logits.len() / self.num_actions, self.num_actions, &self.logits)
    }

    fn env_steps(&self) -> u64 {
        self.steps
    }

    fn episodes(&self) -> u64 {
        self.episodes
    }
}
