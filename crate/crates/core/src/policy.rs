use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::rng::sample_index;

pub const SIMPLEX_TOL: f64 = 1e-9;

/// Row-stochastic table `π(s, ·)`, stored row-major.
///
/// Each row is also the population share vector of the replicator view: the
/// probability of an action is the share of the population playing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyDocument", into = "PolicyDocument")]
pub struct StochasticPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    num_states: usize,
    num_actions: usize,
    probs: Vec<Vec<f64>>,
}

impl TryFrom<PolicyDocument> for StochasticPolicy {
    type Error = Error;
    fn try_from(doc: PolicyDocument) -> Result<Self> {
        if doc.probs.len() != doc.num_states {
            return Err(Error::Dimension(format!(
                "{} rows for {} states",
                doc.probs.len(),
                doc.num_states
            )));
        }
        StochasticPolicy::from_rows(doc.num_actions, doc.probs)
    }
}

impl From<StochasticPolicy> for PolicyDocument {
    fn from(p: StochasticPolicy) -> Self {
        PolicyDocument {
            num_states: p.num_states,
            num_actions: p.num_actions,
            probs: p.probs.chunks(p.num_actions).map(<[f64]>::to_vec).collect(),
        }
    }
}

pub fn check_simplex(row: &[f64]) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Distribution(format!("negative or non-finite entry in {row:?}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Distribution(format!("row sums to {sum}")));
    }
    Ok(())
}

impl StochasticPolicy {
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        assert!(num_actions > 0, "policy needs at least one action");
        let p = 1.0 / num_actions as f64;
        Self {
            num_states,
            num_actions,
            probs: vec![p; num_states * num_actions],
        }
    }

    /// Degenerate policy putting all mass on `actions[s]`.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            check_index("action", a, num_actions)?;
            probs[s * num_actions + a] = 1.0;
        }
        Ok(Self {
            num_states: actions.len(),
            num_actions,
            probs,
        })
    }

    pub fn from_rows(num_actions: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Dimension("zero actions".into()));
        }
        let mut probs = Vec::with_capacity(rows.len() * num_actions);
        for row in &rows {
            if row.len() != num_actions {
                return Err(Error::Dimension(format!(
                    "row of length {} for {num_actions} actions",
                    row.len()
                )));
            }
            check_simplex(row)?;
            probs.extend_from_slice(row);
        }
        Ok(Self {
            num_states: rows.len(),
            num_actions,
            probs,
        })
    }

    /// Builds a policy from a flat row-major table, validating every row.
    pub fn from_flat(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions || num_actions == 0 {
            return Err(Error::Dimension(format!(
                "{} entries for {num_states}x{num_actions}",
                probs.len()
            )));
        }
        for row in probs.chunks(num_actions) {
            check_simplex(row)?;
        }
        Ok(Self {
            num_states,
            num_actions,
            probs,
        })
    }

    /// Softmax of a logit table, row by row.
    pub fn softmax(num_states: usize, num_actions: usize, logits: &[f64]) -> Self {
        assert_eq!(logits.len(), num_states * num_actions);
        let mut probs = Vec::with_capacity(logits.len());
        for row in logits.chunks(num_actions) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&l| (l - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            probs.extend(exps.into_iter().map(|e| e / z));
        }
        Self {
            num_states,
            num_actions,
            probs,
        }
    }

    pub(crate) fn from_raw(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), num_states * num_actions);
        Self {
            num_states,
            num_actions,
            probs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.num_actions)
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_index(self.row(s), rng)
    }

    /// Most probable action; ties go to the lowest index.
    pub fn mode(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    /// Degenerate policy on the per-state mode.
    pub fn greedy(&self) -> Self {
        let actions: Vec<usize> = (0..self.num_states).map(|s| self.mode(s)).collect();
        Self::deterministic(self.num_actions, &actions).expect("mode is in range")
    }

    /// Sum of absolute differences over all entries.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        for row in self.rows() {
            check_simplex(row)?;
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.num_states != other.num_states || self.num_actions != other.num_actions {
            return Err(Error::Dimension(format!(
                "policy {}x{} vs {}x{}",
                self.num_states, self.num_actions, other.num_states, other.num_actions
            )));
        }
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Like [`argmax`] but treats entries within `tol` of the maximum as tied.
pub fn argmax_tol(row: &[f64], tol: f64) -> usize {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    row.iter().position(|&x| x >= m - tol).unwrap_or(0)
}
