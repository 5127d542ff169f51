use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{check_index, Result};
use crate::policy::StochasticPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// `(s_0, a_0, r_0), …, (s_{T-1}, a_{T-1}, r_{T-1})` plus the state the
/// episode ended in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub final_state: usize,
    /// `true` when the horizon cut the episode before an absorbing state.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }

    /// Visited states, including the final one.
    pub fn states(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.steps.iter().map(|s| s.state).collect();
        v.push(self.final_state);
        v
    }
}

/// Samples an episode: `s_0 ~ start_dist`, `a_t ~ π(· | s_t)`, ending at the
/// first absorbing state or after `horizon` steps.
pub fn rollout<R: Rng + ?Sized>(mdp: &TabularMdp, policy: &StochasticPolicy, rng: &mut R) -> Trajectory {
    let s0 = mdp.sample_start(rng);
    rollout_from(mdp, policy, s0, rng)
}

pub fn rollout_from<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start: usize,
    rng: &mut R,
) -> Trajectory {
    let mut steps = Vec::new();
    let mut s = start;
    let mut terminated = mdp.is_absorbing(s);
    for t in 0..mdp.horizon() {
        if terminated {
            break;
        }
        let a = policy.sample(s, rng);
        let (next, reward) = mdp.step(s, a, t, rng);
        steps.push(Step { state: s, action: a, reward });
        s = next;
        terminated = mdp.is_absorbing(s);
    }
    Trajectory {
        steps,
        final_state: s,
        truncated: !terminated,
    }
}

/// `Σ_t γ^t r_t`; zero for an empty trajectory.
pub fn discounted_return(traj: &Trajectory, gamma: f64) -> f64 {
    let mut g = 0.0;
    for step in traj.steps.iter().rev() {
        g = step.reward + gamma * g;
    }
    g
}

/// `Σ_{k ≥ t} γ^{k - t} r_k`.
pub fn return_to_go(traj: &Trajectory, t: usize, gamma: f64) -> Result<f64> {
    check_index("time step", t, traj.steps.len())?;
    let mut g = 0.0;
    for step in traj.steps[t..].iter().rev() {
        g = step.reward + gamma * g;
    }
    Ok(g)
}
