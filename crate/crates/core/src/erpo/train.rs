use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fitness::{estimate_fitness_with, shift_fitness, FitnessEstimator, PositivityMode};
use super::replicator::replicator_update;
use super::{decay_weight, mix_policies};
use crate::error::{Error, Result};
use crate::mdp::{discounted_return, horizon_policy_return, rollout, TabularMdp, Trajectory};
use crate::policy::StochasticPolicy;
use crate::rng::stream;

/// How `η` is measured after each batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// Mean discounted return of the batch just sampled.
    #[default]
    BatchMean,
    /// Exact finite-horizon return of the sampling policy. Small MDPs only.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErpoConfig {
    pub w0: f64,
    pub nu: f64,
    pub eps: f64,
    /// `None` uses `1e-3` times the largest absolute reward of the MDP.
    pub delta: Option<f64>,
    pub batch_size: usize,
    pub max_iters: usize,
    pub patience: usize,
    pub positivity_mode: PositivityMode,
    pub positivity_kappa: f64,
    /// `None` uses the MDP's discount.
    pub gamma: Option<f64>,
    pub estimator: FitnessEstimator,
    pub eta_mode: EtaMode,
    pub seed: u64,
    /// Fill `wall_ms` in the history. Off by default so reruns are identical.
    pub record_wall_time: bool,
}

impl Default for ErpoConfig {
    fn default() -> Self {
        Self {
            w0: 0.9,
            nu: 0.05,
            eps: 0.05,
            delta: None,
            batch_size: 64,
            max_iters: 500,
            patience: 3,
            positivity_mode: PositivityMode::AffineMin,
            positivity_kappa: 1.0,
            gamma: None,
            estimator: FitnessEstimator::ReturnToGo,
            eta_mode: EtaMode::BatchMean,
            seed: 0,
            record_wall_time: false,
        }
    }
}

fn config_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}

impl ErpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w0) {
            return Err(config_err("w0", "must lie in [0, 1]"));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(config_err("nu", "must lie in (0, 1)"));
        }
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return Err(config_err("eps", "must lie in [0, 1)"));
        }
        if self.eps >= self.w0 {
            return Err(config_err("eps", "must be below w0"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(config_err("delta", "must be positive"));
            }
        }
        if self.batch_size == 0 {
            return Err(config_err("batch_size", "must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(config_err("max_iters", "must be at least 1"));
        }
        if self.patience == 0 {
            return Err(config_err("patience", "must be at least 1"));
        }
        if !(self.positivity_kappa > 0.0 && self.positivity_kappa.is_finite()) {
            return Err(config_err("positivity_kappa", "must be positive"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(config_err("gamma", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Largest absolute reward on any transition out of a non-absorbing state.
pub fn reward_scale(mdp: &TabularMdp) -> f64 {
    let mut scale = 0.0f64;
    for s in 0..mdp.num_states() {
        if mdp.is_absorbing(s) {
            continue;
        }
        for a in 0..mdp.num_actions() {
            for o in mdp.outcomes(s, a) {
                scale = scale.max(o.reward.abs());
            }
        }
    }
    scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub w: f64,
    pub eta: f64,
    pub env_steps: u64,
    pub policy_l1_delta: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<IterRecord>,
    pub converged: bool,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "iter,w,eta,env_steps,policy_l1_delta,wall_ms";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.w, r.eta, r.env_steps, r.policy_l1_delta, r.wall_ms
            );
        }
        out
    }

    pub fn last_eta(&self) -> Option<f64> {
        self.records.last().map(|r| r.eta)
    }
}

#[derive(Debug, Clone)]
pub struct ErpoResult {
    /// Final training mixture, the policy the algorithm returns.
    pub policy: StochasticPolicy,
    /// The replicator population without the old-policy component.
    pub pi_new: StochasticPolicy,
    pub history: TrainHistory,
}

/// `batch_size` episodes of `policy`, episode `e` of iteration `iter` drawing
/// from its own stream. Returned in episode order.
pub fn sample_batch(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    seed: u64,
    iter: u64,
    batch_size: usize,
) -> Vec<Trajectory> {
    (0..batch_size as u64)
        .into_par_iter()
        .map(|ep| rollout(mdp, policy, &mut stream(seed, &[iter, ep])))
        .collect()
}

/// Iteration-at-a-time driver, for callers that interleave evaluation.
#[derive(Debug, Clone)]
pub struct ErpoTrainer<'a> {
    mdp: &'a TabularMdp,
    pi_star: &'a StochasticPolicy,
    cfg: ErpoConfig,
    delta: f64,
    gamma: f64,
    pi_new: StochasticPolicy,
    pi_train: StochasticPolicy,
    w: f64,
    iter: usize,
    env_steps: u64,
    eta_prev: Option<f64>,
    streak: usize,
    history: TrainHistory,
    started: Instant,
}

impl<'a> ErpoTrainer<'a> {
    pub fn new(mdp: &'a TabularMdp, pi_star: &'a StochasticPolicy, cfg: ErpoConfig) -> Result<Self> {
        cfg.validate()?;
        mdp.check_policy(pi_star)?;
        pi_star.validate()?;
        let delta = match cfg.delta {
            Some(d) => d,
            None => {
                let scale = reward_scale(mdp);
                1e-3 * if scale > 0.0 { scale } else { 1.0 }
            }
        };
        let gamma = cfg.gamma.unwrap_or(mdp.discount());
        let pi_new = StochasticPolicy::uniform(mdp.num_states(), mdp.num_actions());
        let pi_train = mix_policies(pi_star, &pi_new, cfg.w0)?;
        Ok(Self {
            mdp,
            pi_star,
            w: cfg.w0,
            cfg,
            delta,
            gamma,
            pi_new,
            pi_train,
            iter: 0,
            env_steps: 0,
            eta_prev: None,
            streak: 0,
            history: TrainHistory::default(),
            started: Instant::now(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.history.converged || self.iter >= self.cfg.max_iters
    }

    pub fn converged(&self) -> bool {
        self.history.converged
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn weight(&self) -> f64 {
        self.w
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pi_train(&self) -> &StochasticPolicy {
        &self.pi_train
    }

    pub fn pi_new(&self) -> &StochasticPolicy {
        &self.pi_new
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    /// One batch: sample under `π_train`, update `π_new`, remix, decay `w`.
    pub fn step(&mut self) -> Result<&IterRecord> {
        let batch = sample_batch(
            self.mdp,
            &self.pi_train,
            self.cfg.seed,
            self.iter as u64,
            self.cfg.batch_size,
        );
        let steps: u64 = batch.iter().map(|t| t.len() as u64).sum();
        let fit = estimate_fitness_with(
            &batch,
            self.mdp.num_states(),
            self.mdp.num_actions(),
            self.gamma,
            self.cfg.estimator,
        );
        let fit = shift_fitness(&fit, self.cfg.positivity_mode, self.cfg.positivity_kappa);
        self.pi_new = replicator_update(&self.pi_new, &fit)?;

        let eta = match self.cfg.eta_mode {
            EtaMode::BatchMean => {
                batch.iter().map(|t| discounted_return(t, self.gamma)).sum::<f64>() / batch.len() as f64
            }
            EtaMode::Exact => horizon_policy_return(self.mdp, &self.pi_train)?,
        };

        let next = mix_policies(self.pi_star, &self.pi_new, self.w)?;
        let l1 = next.l1_distance(&self.pi_train);
        self.pi_train = next;
        self.env_steps += steps;
        self.iter += 1;
        let wall_ms = if self.cfg.record_wall_time {
            self.started.elapsed().as_millis() as u64
        } else {
            0
        };
        self.history.records.push(IterRecord {
            iter: self.iter,
            w: self.w,
            eta,
            env_steps: self.env_steps,
            policy_l1_delta: l1,
            wall_ms,
        });
        self.w = decay_weight(self.w, self.cfg.nu, self.cfg.eps);

        if let Some(prev) = self.eta_prev {
            if eta - prev <= self.delta {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.eta_prev = Some(eta);
        if self.streak >= self.cfg.patience {
            self.history.converged = true;
        }
        Ok(self.history.records.last().expect("just pushed"))
    }

    pub fn finish(self) -> ErpoResult {
        ErpoResult {
            policy: self.pi_train,
            pi_new: self.pi_new,
            history: self.history,
        }
    }
}

/// Runs the mixture-policy replicator loop until `η` stops improving by more
/// than `δ` for `patience` consecutive batches, or `max_iters` is reached.
pub fn erpo_train(mdp_new: &TabularMdp, pi_star_old: &StochasticPolicy, cfg: ErpoConfig) -> Result<ErpoResult> {
    let mut trainer = ErpoTrainer::new(mdp_new, pi_star_old, cfg)?;
    while !trainer.is_done() {
        trainer.step()?;
    }
    Ok(trainer.finish())
}
