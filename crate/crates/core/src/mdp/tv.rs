//! Total-variation distance between the dynamics of two MDPs on a shared
//! state-action space.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    /// `max_{s,a} ½ ‖Δ(·|s,a) − Δ'(·|s,a)‖₁`.
    pub max: f64,
    pub mean: f64,
    /// Number of `(s, a)` pairs compared.
    pub pairs: usize,
    /// A pair attaining the maximum.
    pub argmax: Option<(usize, usize)>,
}

/// States reachable from the start support under some action sequence.
pub fn reachable_states(mdp: &TabularMdp) -> Vec<bool> {
    let n = mdp.num_states();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for (s, &p) in mdp.start_dist().iter().enumerate() {
        if p > 0.0 {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if mdp.is_absorbing(s) {
            continue;
        }
        for a in 0..mdp.num_actions() {
            for o in mdp.outcomes(s, a) {
                if !seen[o.next] {
                    seen[o.next] = true;
                    queue.push_back(o.next);
                }
            }
        }
    }
    seen
}

fn pair_tv(a: &TabularMdp, b: &TabularMdp, s: usize, act: usize) -> f64 {
    // Both outcome lists are sorted by next state.
    let (x, y) = (a.outcomes(s, act), b.outcomes(s, act));
    let (mut i, mut j, mut l1) = (0, 0, 0.0);
    while i < x.len() || j < y.len() {
        match (x.get(i), y.get(j)) {
            (Some(p), Some(q)) if p.next == q.next => {
                l1 += (p.prob - q.prob).abs();
                i += 1;
                j += 1;
            }
            (Some(p), Some(q)) if p.next < q.next => {
                l1 += p.prob;
                i += 1;
            }
            (Some(_), Some(q)) => {
                l1 += q.prob;
                j += 1;
            }
            (Some(p), None) => {
                l1 += p.prob;
                i += 1;
            }
            (None, Some(q)) => {
                l1 += q.prob;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    0.5 * l1
}

fn check_shapes(a: &TabularMdp, b: &TabularMdp) -> Result<()> {
    if a.num_states() != b.num_states() || a.num_actions() != b.num_actions() {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{} with {}x{}",
            a.num_states(),
            a.num_actions(),
            b.num_states(),
            b.num_actions()
        )));
    }
    Ok(())
}

/// TV over the given `(s, a)` pairs.
pub fn tv_distance_over(a: &TabularMdp, b: &TabularMdp, pairs: &[(usize, usize)]) -> Result<TvReport> {
    check_shapes(a, b)?;
    let mut report = TvReport {
        max: 0.0,
        mean: 0.0,
        pairs: pairs.len(),
        argmax: None,
    };
    let mut total = 0.0;
    for &(s, act) in pairs {
        a.check_state(s)?;
        a.check_action(act)?;
        let d = pair_tv(a, b, s, act);
        total += d;
        if report.argmax.is_none() || d > report.max {
            report.max = d;
            report.argmax = Some((s, act));
        }
    }
    if !pairs.is_empty() {
        report.mean = total / pairs.len() as f64;
    }
    Ok(report)
}

/// TV over every action of states that are reachable and non-absorbing in
/// both models. Absorbing states end the episode, so their rows never shape
/// a trajectory.
pub fn tv_distance(a: &TabularMdp, b: &TabularMdp) -> Result<TvReport> {
    check_shapes(a, b)?;
    let (ra, rb) = (reachable_states(a), reachable_states(b));
    let pairs: Vec<(usize, usize)> = (0..a.num_states())
        .filter(|&s| ra[s] && rb[s] && !a.is_absorbing(s) && !b.is_absorbing(s))
        .flat_map(|s| (0..a.num_actions()).map(move |act| (s, act)))
        .collect();
    tv_distance_over(a, b, &pairs)
}
