//! Finite-horizon backward induction. Unlike the stationary solvers this
//! accounts for episode truncation at the horizon and for the goal time
//! penalty, so its numbers match what rollouts measure.

use super::{QTable, TabularMdp};
use crate::error::Result;
use crate::policy::StochasticPolicy;

#[derive(Debug, Clone)]
pub struct HorizonSolution {
    /// Optimal expected return from the start distribution.
    pub eta: f64,
    /// Optimal values with the full horizon remaining.
    pub v0: Vec<f64>,
    /// Optimal action values with the full horizon remaining.
    pub q0: QTable,
}

impl HorizonSolution {
    /// Stationary policy greedy in `q0`, ties to the lowest action.
    pub fn policy(&self) -> StochasticPolicy {
        self.q0.greedy(1e-9 * (1.0 + self.eta.abs()))
    }
}

#[inline]
fn backup(mdp: &TabularMdp, v_next: &[f64], s: usize, a: usize, t: usize) -> f64 {
    let gamma = mdp.discount();
    mdp.outcomes(s, a)
        .iter()
        .map(|o| o.prob * (mdp.realized_reward(s, o.next, o.reward, t) + gamma * v_next[o.next]))
        .sum()
}

fn start_value(mdp: &TabularMdp, v: &[f64]) -> f64 {
    mdp.start_dist().iter().zip(v).map(|(p, x)| p * x).sum()
}

/// Optimal expected return over `horizon` steps by backward induction
/// `V_T = 0`, `V_t(s) = max_a Σ Δ (r_t + γ V_{t+1})`.
pub fn horizon_optimum(mdp: &TabularMdp) -> HorizonSolution {
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut v_next = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut q0 = QTable::zeros(n, m);
    for t in (0..mdp.horizon()).rev() {
        for s in 0..n {
            if mdp.is_absorbing(s) {
                v[s] = 0.0;
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                let q = backup(mdp, &v_next, s, a, t);
                if t == 0 {
                    q0.values[s * m + a] = q;
                }
                best = best.max(q);
            }
            v[s] = best;
        }
        std::mem::swap(&mut v, &mut v_next);
    }
    HorizonSolution {
        eta: start_value(mdp, &v_next),
        v0: v_next,
        q0,
    }
}

/// Per-state expected return of a stationary policy over the full horizon.
pub fn horizon_policy_values(mdp: &TabularMdp, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut v_next = vec![0.0; n];
    let mut v = vec![0.0; n];
    for t in (0..mdp.horizon()).rev() {
        for s in 0..n {
            if mdp.is_absorbing(s) {
                v[s] = 0.0;
                continue;
            }
            let row = policy.row(s);
            let mut acc = 0.0;
            for a in 0..m {
                if row[a] > 0.0 {
                    acc += row[a] * backup(mdp, &v_next, s, a, t);
                }
            }
            v[s] = acc;
        }
        std::mem::swap(&mut v, &mut v_next);
    }
    Ok(v_next)
}

/// Exact expected return of a stationary policy from the start distribution.
pub fn horizon_policy_return(mdp: &TabularMdp, policy: &StochasticPolicy) -> Result<f64> {
    Ok(start_value(mdp, &horizon_policy_values(mdp, policy)?))
}
