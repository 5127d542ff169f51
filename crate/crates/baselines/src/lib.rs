//! Tabular learning baselines and grid search.
//!
//! Every learner implements [`EpisodicLearner`]: the caller hands it one
//! episode's random stream at a time, so a run is reproducible from its seed
//! and the caller controls budgets and evaluation.

mod actor_critic;
mod config;
mod dr;
mod ppo;
pub mod search;
mod td;

pub use actor_critic::ActorCritic;
pub use config::{Algo, BaselineConfig, WarmStart};
pub use dr::{domain_randomization_train, ShiftSampler};
pub use ppo::{clipped_surrogate, clipped_surrogate_grad, PpoClip};
pub use search::{astar, bfs, idastar, path_return, SearchResult};
pub use td::TdControl;

use erpo_core::erpo::{IterRecord, TrainHistory};
use erpo_core::mdp::discounted_return;
use erpo_core::mdp::rollout;
use erpo_core::rng::{stream, Rng};
use erpo_core::{StochasticPolicy, TabularMdp};

/// Stream tag for training episodes.
pub const TRAIN_STREAM: u64 = 0x7121;
/// Stream tag for evaluation rollouts.
pub const EVAL_STREAM: u64 = 0xE7A1;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] erpo_core::Error),
    #[error(transparent)]
    Env(#[from] erpo_envs::EnvError),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

pub trait EpisodicLearner: Send {
    /// Runs one episode on `mdp`, learning as it goes; returns the number of
    /// environment steps taken.
    fn train_episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> u64;

    /// The policy to evaluate: greedy for value learners, the stochastic
    /// policy itself for policy learners.
    fn policy(&self) -> StochasticPolicy;

    fn env_steps(&self) -> u64;

    fn episodes(&self) -> u64;

    /// Current exploration level (ε for ε-greedy learners).
    fn exploration(&self) -> f64 {
        0.0
    }
}

/// Random stream of training episode `episode` under master `seed`.
pub fn episode_rng(seed: u64, episode: u64) -> Rng {
    stream(seed, &[TRAIN_STREAM, episode])
}

/// Mean return of `episodes` rollouts of a frozen policy. `tag` separates
/// evaluation passes.
pub fn mean_return(mdp: &TabularMdp, policy: &StochasticPolicy, episodes: usize, seed: u64, tag: u64) -> f64 {
    if episodes == 0 {
        return 0.0;
    }
    let total: f64 = (0..episodes as u64)
        .map(|e| {
            let traj = rollout(mdp, policy, &mut stream(seed, &[EVAL_STREAM, tag, e]));
            discounted_return(&traj, mdp.discount())
        })
        .sum();
    total / episodes as f64
}

/// Builds the learner `cfg.algo` names, sized for `mdp`.
pub fn make_learner(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<Box<dyn EpisodicLearner>> {
    cfg.validate()?;
    Ok(match cfg.algo {
        Algo::QLearning | Algo::Sarsa => Box::new(TdControl::new(mdp, cfg)?),
        Algo::ActorCritic => Box::new(ActorCritic::new(mdp, cfg)?),
        Algo::PpoClip => Box::new(PpoClip::new(mdp, cfg)?),
    })
}

/// Trains for `cfg.episodes` episodes (or until `cfg.max_env_steps`),
/// evaluating every `cfg.eval_every` episodes and once at the end.
pub fn train(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<(StochasticPolicy, TrainHistory)> {
    let mut learner = make_learner(mdp, cfg)?;
    let mut history = TrainHistory::default();
    let mut last: Option<StochasticPolicy> = None;
    let mut record = |learner: &dyn EpisodicLearner, history: &mut TrainHistory| {
        let pi = learner.policy();
        let idx = history.records.len() as u64;
        let eta = mean_return(mdp, &pi, cfg.eval_episodes, cfg.seed, idx);
        let l1 = last.as_ref().map_or(0.0, |p| pi.l1_distance(p));
        history.records.push(IterRecord {
            iter: idx as usize + 1,
            w: learner.exploration(),
            eta,
            env_steps: learner.env_steps(),
            policy_l1_delta: l1,
            wall_ms: 0,
        });
        last = Some(pi);
    };
    for ep in 0..cfg.episodes as u64 {
        if cfg.max_env_steps.is_some_and(|m| learner.env_steps() >= m) {
            break;
        }
        learner.train_episode(mdp, &mut episode_rng(cfg.seed, ep));
        if (ep + 1) % cfg.eval_every as u64 == 0 {
            record(learner.as_ref(), &mut history);
        }
    }
    if history.records.last().map(|r| r.env_steps) != Some(learner.env_steps()) {
        record(learner.as_ref(), &mut history);
    }
    Ok((learner.policy(), history))
}

/// `q_learning` entry point; `cfg.algo` picks Q-learning or SARSA.
pub fn q_learning(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<(StochasticPolicy, TrainHistory)> {
    match cfg.algo {
        Algo::QLearning | Algo::Sarsa => train(mdp, cfg),
        other => Err(BaselineError::Config {
            field: "algo",
            reason: format!("{other:?} is not a TD control method"),
        }),
    }
}

pub fn actor_critic_tabular(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<(StochasticPolicy, TrainHistory)> {
    train(mdp, &BaselineConfig { algo: Algo::ActorCritic, ..cfg.clone() })
}

pub fn ppo_clip_tabular(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<(StochasticPolicy, TrainHistory)> {
    train(mdp, &BaselineConfig { algo: Algo::PpoClip, ..cfg.clone() })
}

/// Softmax logits that reproduce `pi` with every probability floored at
/// `floor` before taking logs.
pub(crate) fn logits_from_policy(pi: &StochasticPolicy, floor: f64) -> Vec<f64> {
    pi.as_flat().iter().map(|&p| p.max(floor).ln()).collect()
}

/// In-place softmax of one row of logits.
pub(crate) fn softmax_row(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - m).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learners_pick_the_better_arm() {
        let mdp = testutil::single_choice(1.0, 5.0);
        for algo in [Algo::QLearning, Algo::Sarsa, Algo::ActorCritic, Algo::PpoClip] {
            let cfg = BaselineConfig { algo, ..BaselineConfig::default() };
            let (pi, hist) = train(&mdp, &cfg).unwrap();
            assert!(pi.prob(0, 1) >= 0.99, "{algo:?}: {:?}", pi.row(0));
            assert!(hist.records.iter().all(|r| r.env_steps > 0));
            pi.validate().unwrap();
        }
    }

    #[test]
    fn same_seed_same_csv() {
        let mdp = testutil::single_choice(1.0, 2.0);
        for algo in [Algo::QLearning, Algo::ActorCritic, Algo::PpoClip] {
            let cfg = BaselineConfig { algo, episodes: 100, eval_every: 10, ..BaselineConfig::default() };
            let a = train(&mdp, &cfg).unwrap().1.to_csv();
            let b = train(&mdp, &cfg).unwrap().1.to_csv();
            assert_eq!(a, b);
            assert_eq!(a.lines().count(), 11);
        }
    }

    #[test]
    fn q_learning_rejects_policy_algos() {
        let mdp = testutil::single_choice(1.0, 2.0);
        let cfg = BaselineConfig { algo: Algo::PpoClip, ..BaselineConfig::default() };
        assert!(q_learning(&mdp, &cfg).is_err());
    }

    #[test]
    fn eval_is_pure() {
        let mdp = testutil::single_choice(1.0, 2.0);
        let pi = StochasticPolicy::uniform(2, 2);
        assert_eq!(mean_return(&mdp, &pi, 50, 3, 0), mean_return(&mdp, &pi, 50, 3, 0));
        assert_ne!(mean_return(&mdp, &pi, 50, 3, 0), mean_return(&mdp, &pi, 50, 3, 1));
    }
}
