//! One-step Q-learning and SARSA with an ε-greedy behaviour policy.

use erpo_core::mdp::QTable;
use erpo_core::policy::argmax;
use erpo_core::rng::Rng;
use erpo_core::{StochasticPolicy, TabularMdp};
use rand::Rng as _;

use crate::config::{Algo, BaselineConfig};
use crate::{BaselineError, EpisodicLearner, Result};

#[derive(Debug, Clone)]
pub struct TdControl {
    cfg: BaselineConfig,
    q: QTable,
    gamma: f64,
    steps: u64,
    episodes: u64,
    epsilon: f64,
}

impl TdControl {
    pub fn new(mdp: &TabularMdp, cfg: &BaselineConfig) -> Result<Self> {
        let (n, m) = (mdp.num_states(), mdp.num_actions());
        let q = match cfg.warm_start.as_ref().and_then(|w| w.q.clone()) {
            Some(q) => {
                if q.num_states() != n || q.num_actions != m {
                    return Err(BaselineError::Config {
                        field: "warm_start",
                        reason: format!("Q table is {}x{}, MDP is {n}x{m}", q.num_states(), q.num_actions),
                    });
                }
                q
            }
            None => QTable::zeros(n, m),
        };
        Ok(Self {
            cfg: cfg.clone(),
            q,
            gamma: cfg.gamma.unwrap_or(mdp.discount()),
            steps: 0,
            episodes: 0,
            epsilon: cfg.eps_start,
        })
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    fn progress(&self) -> f64 {
        match self.cfg.max_env_steps {
            Some(m) => self.steps as f64 / m as f64,
            None => self.episodes as f64 / self.cfg.episodes as f64,
        }
    }

    /// ε-greedy choice; exact ties among greedy actions are broken at random.
    fn choose(&self, s: usize, rng: &mut Rng) -> usize {
        let m = self.q.num_actions;
        if rng.gen::<f64>() < self.epsilon {
            return rng.gen_range(0..m);
        }
        let row = self.q.row(s);
        let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..m).filter(|&a| row[a] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        }
    }

    fn max_q(&self, s: usize) -> f64 {
        self.q.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl EpisodicLearner for TdControl {
    fn train_episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> u64 {
        self.epsilon = self.cfg.epsilon_at(self.progress());
        let m = self.q.num_actions;
        let sarsa = self.cfg.algo == Algo::Sarsa;
        let mut s = mdp.sample_start(rng);
        let mut a = self.choose(s, rng);
        let mut taken = 0;
        for t in 0..mdp.horizon() {
            if mdp.is_absorbing(s) {
                break;
            }
            let (next, r) = mdp.step(s, a, t, rng);
            taken += 1;
            let terminal = mdp.is_absorbing(next);
            let a_next = self.choose(next, rng);
            let boot = if terminal {
                0.0
            } else if sarsa {
                self.q.get(next, a_next)
            } else {
                self.max_q(next)
            };
            let i = s * m + a;
            self.q.values[i] += self.cfg.alpha * (r + self.gamma * boot - self.q.values[i]);
            s = next;
            a = a_next;
        }
        self.steps += taken;
        self.episodes += 1;
        taken
    }

    fn policy(&self) -> StochasticPolicy {
        let actions: Vec<usize> = (0..self.q.num_states()).map(|s| argmax(self.q.row(s))).collect();
        StochasticPolicy::deterministic(self.q.num_actions, &actions).expect("actions in range")
    }

    fn env_steps(&self) -> u64 {
        self.steps
    }

    fn episodes(&self) -> u64 {
        self.episodes
    }

    fn exploration(&self) -> f64 {
        self.epsilon
    }
}
