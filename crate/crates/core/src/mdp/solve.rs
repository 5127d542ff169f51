//! Stationary Bellman solves by successive approximation.
//!
//! Absorbing states are pinned at zero value. The goal time penalty is not
//! part of the stationary model; use the finite-horizon solver for that.

use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{Error, Result};
use crate::policy::{argmax_tol, StochasticPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable(pub Vec<f64>);

impl ValueTable {
    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub num_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.num_actions
    }

    /// Greedy policy with ties (within `tol`) going to the lowest action.
    pub fn greedy(&self, tol: f64) -> StochasticPolicy {
        let actions: Vec<usize> = (0..self.num_states())
            .map(|s| argmax_tol(self.row(s), tol))
            .collect();
        StochasticPolicy::deterministic(self.num_actions, &actions).expect("argmax in range")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Values beyond this magnitude are reported as divergence.
    pub blowup: f64,
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 200_000,
            blowup: 1e12,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Model(format!("tolerance {tol} must be positive")))
    }
}

#[inline]
fn backup(mdp: &TabularMdp, v: &[f64], s: usize, a: usize) -> f64 {
    let gamma = mdp.discount();
    mdp.outcomes(s, a)
        .iter()
        .map(|o| o.prob * (o.reward + gamma * v[o.next]))
        .sum()
}

fn q_from_v(mdp: &TabularMdp, v: &[f64]) -> QTable {
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut q = QTable::zeros(n, m);
    for s in 0..n {
        if mdp.is_absorbing(s) {
            continue;
        }
        for a in 0..m {
            q.values[s * m + a] = backup(mdp, v, s, a);
        }
    }
    q
}

/// Exact `(v^π, q^π)` with `v(s) = Σ_a π(s,a) q(s,a)` and
/// `q(s,a) = Σ_{s'} Δ(s,a,s') (r(s,a,s') + γ v(s'))`.
pub fn evaluate_policy_exact(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    tol: f64,
) -> Result<(ValueTable, QTable)> {
    evaluate_policy_from(mdp, policy, None, SolveOptions::with_tol(tol))
}

/// [`evaluate_policy_exact`] warm-started from `init`.
pub fn evaluate_policy_from(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    init: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<(ValueTable, QTable)> {
    check_tol(opts.tol)?;
    mdp.check_policy(policy)?;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut v = match init {
        Some(init) if init.len() == n => init.to_vec(),
        Some(_) => return Err(Error::Dimension("warm-start value length".into())),
        None => vec![0.0; n],
    };
    for s in 0..n {
        if mdp.is_absorbing(s) {
            v[s] = 0.0;
        }
    }
    let mut next = v.clone();
    for sweep in 1..=opts.max_sweeps {
        let mut residual = 0.0f64;
        for s in 0..n {
            if mdp.is_absorbing(s) {
                continue;
            }
            let row = policy.row(s);
            let mut acc = 0.0;
            for a in 0..m {
                if row[a] > 0.0 {
                    acc += row[a] * backup(mdp, &v, s, a);
                }
            }
            residual = residual.max((acc - v[s]).abs());
            next[s] = acc;
        }
        std::mem::swap(&mut v, &mut next);
        if !residual.is_finite() || v.iter().any(|x| x.abs() > opts.blowup) {
            return Err(Error::Divergence { sweeps: sweep, residual });
        }
        if residual < opts.tol {
            let q = q_from_v(mdp, &v);
            return Ok((ValueTable(v), q));
        }
    }
    let residual = bellman_residual(mdp, policy, &v);
    Err(Error::Divergence {
        sweeps: opts.max_sweeps,
        residual,
    })
}

fn bellman_residual(mdp: &TabularMdp, policy: &StochasticPolicy, v: &[f64]) -> f64 {
    (0..mdp.num_states())
        .filter(|&s| !mdp.is_absorbing(s))
        .map(|s| {
            let new: f64 = (0..mdp.num_actions())
                .map(|a| policy.prob(s, a) * backup(mdp, v, s, a))
                .sum();
            (new - v[s]).abs()
        })
        .fold(0.0, f64::max)
}

fn optimal_values(mdp: &TabularMdp, opts: SolveOptions) -> Result<Vec<f64>> {
    check_tol(opts.tol)?;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut v = vec![0.0; n];
    let mut next = v.clone();
    for sweep in 1..=opts.max_sweeps {
        let mut residual = 0.0f64;
        for s in 0..n {
            if mdp.is_absorbing(s) {
                continue;
            }
            let best = (0..m)
                .map(|a| backup(mdp, &v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            next[s] = best;
        }
        std::mem::swap(&mut v, &mut next);
        if !residual.is_finite() || v.iter().any(|x| x.abs() > opts.blowup) {
            return Err(Error::Divergence { sweeps: sweep, residual });
        }
        if residual < opts.tol {
            return Ok(v);
        }
    }
    Err(Error::Divergence {
        sweeps: opts.max_sweeps,
        residual: f64::NAN,
    })
}

/// Optimal values and a deterministic optimal policy. Actions whose
/// optimal q-values agree within `tol` are tied; the lowest index wins.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<(ValueTable, StochasticPolicy)> {
    let v = optimal_values(mdp, SolveOptions::with_tol(tol))?;
    let q = q_from_v(mdp, &v);
    let tie = tie_tolerance(mdp, tol);
    Ok((ValueTable(v), q.greedy(tie)))
}

/// Optimal action values `q*`.
pub fn optimal_q(mdp: &TabularMdp, tol: f64) -> Result<QTable> {
    let v = optimal_values(mdp, SolveOptions::with_tol(tol))?;
    Ok(q_from_v(mdp, &v))
}

/// Bound on how far a q-value computed from a `tol`-accurate value table
/// can be from the true one.
pub(crate) fn tie_tolerance(mdp: &TabularMdp, tol: f64) -> f64 {
    let g = mdp.discount();
    if g < 1.0 {
        4.0 * tol / (1.0 - g)
    } else {
        4.0 * tol * mdp.num_states() as f64
    }
}

/// `η(π) = Σ_s start(s) v^π(s)`.
pub fn expected_return(mdp: &TabularMdp, policy: &StochasticPolicy, tol: f64) -> Result<f64> {
    let (v, _) = evaluate_policy_exact(mdp, policy, tol)?;
    Ok(mdp
        .start_dist()
        .iter()
        .zip(&v.0)
        .map(|(p, x)| p * x)
        .sum())
}
