use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MdpBuilder, TabularMdp};
use crate::error::Result;
use crate::rng::stream;

/// Parameters of a random sparse MDP with one absorbing goal (the last state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomMdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    /// Successors per `(s, a)` drawn uniformly from `1..=max_successors`.
    pub max_successors: usize,
    /// Probability that a row also gets an edge into the goal.
    pub goal_edge_prob: f64,
    pub discount: f64,
    /// Rewards in `[0.1, 1)` if true, `[-1, 1)` otherwise.
    pub positive_rewards: bool,
    /// Added to every goal-entry reward.
    pub goal_bonus: f64,
    pub horizon: usize,
}

impl Default for RandomMdpSpec {
    fn default() -> Self {
        Self {
            num_states: 10,
            num_actions: 3,
            max_successors: 3,
            goal_edge_prob: 0.3,
            discount: 0.9,
            positive_rewards: true,
            goal_bonus: 5.0,
            horizon: 200,
        }
    }
}

pub fn random_mdp(spec: &RandomMdpSpec, seed: u64) -> Result<TabularMdp> {
    let n = spec.num_states;
    let goal = n.saturating_sub(1);
    let mut rng = stream(seed, &[0x6d6470]);
    let mut b = MdpBuilder::new(n, spec.num_actions);
    for s in 0..goal {
        for a in 0..spec.num_actions {
            let k = rng.gen_range(1..=spec.max_successors.clamp(1, n));
            let mut nexts: Vec<usize> = sample(&mut rng, n, k).into_vec();
            if !nexts.contains(&goal) && rng.gen_bool(spec.goal_edge_prob) {
                nexts.push(goal);
            }
            let weights: Vec<f64> = nexts.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            let z: f64 = weights.iter().sum();
            let outcomes: Vec<(usize, f64, f64)> = nexts
                .iter()
                .zip(&weights)
                .map(|(&next, &w)| {
                    let r = if spec.positive_rewards {
                        rng.gen_range(0.1..1.0)
                    } else {
                        rng.gen_range(-1.0..1.0)
                    };
                    let r = if next == goal { r + spec.goal_bonus } else { r };
                    (next, w / z, r)
                })
                .collect();
            b.transition(s, a, &outcomes);
        }
    }
    b.goal(goal);
    let mut start = vec![0.0; n];
    for p in start.iter_mut().take(goal) {
        *p = 1.0 / goal as f64;
    }
    b.start(start).horizon(spec.horizon).discount(spec.discount);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_models_are_valid_and_seeded() {
        let spec = RandomMdpSpec::default();
        let a = random_mdp(&spec, 4).unwrap();
        let b = random_mdp(&spec, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_mdp(&spec, 5).unwrap());
        assert!(a.is_goal(spec.num_states - 1));
    }
}
