//! Replicator iteration with exact `q` and `v` in place of sampled fitness.

use super::replicator::replicator_row;
use crate::error::{Error, Result};
use crate::mdp::{evaluate_policy_from, QTable, SolveOptions, TabularMdp, ValueTable};
use crate::policy::StochasticPolicy;

#[derive(Debug, Clone)]
pub struct ExactStep {
    pub policy: StochasticPolicy,
    /// Values of the input policy.
    pub v: ValueTable,
    pub q: QTable,
    /// Constant added to every `q` and `v` before taking ratios.
    pub offset: f64,
}

/// `π'(s, a) = π(s, a) q(s, a) / v(s)` on every non-absorbing state.
/// Fails if some `v(s) <= 0` or `q(s, a) < 0` on the support.
pub fn exact_replicator_iteration(mdp: &TabularMdp, policy: &StochasticPolicy, tol: f64) -> Result<StochasticPolicy> {
    Ok(exact_replicator_step(mdp, policy, None, SolveOptions::with_tol(tol), Some(0.0))?.policy)
}

/// General form. `warm` seeds the policy evaluation. `offset: None` picks
/// the smallest constant that makes every supported `q` at least 1 when
/// some `q` is non-positive, and 0 otherwise.
pub fn exact_replicator_step(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    warm: Option<&[f64]>,
    opts: SolveOptions,
    offset: Option<f64>,
) -> Result<ExactStep> {
    let (v, q) = evaluate_policy_from(mdp, policy, warm, opts)?;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let offset = offset.unwrap_or_else(|| {
        let mut lo = f64::INFINITY;
        for s in (0..n).filter(|&s| !mdp.is_absorbing(s)) {
            for a in 0..m {
                if policy.prob(s, a) > 0.0 {
                    lo = lo.min(q.get(s, a));
                }
            }
        }
        if lo.is_finite() && lo <= 0.0 {
            1.0 - lo
        } else {
            0.0
        }
    });
    let mut probs = policy.as_flat().to_vec();
    let mut f = vec![0.0; m];
    for s in 0..n {
        if mdp.is_absorbing(s) {
            continue;
        }
        for (a, slot) in f.iter_mut().enumerate() {
            *slot = q.get(s, a) + offset;
        }
        replicator_row(policy.row(s), &f, &mut probs[s * m..(s + 1) * m], s).map_err(|e| match e {
            Error::Positivity { state, detail } => Error::Positivity {
                state,
                detail: format!("{detail}; v = {}", v.get(s) + offset),
            },
            other => other,
        })?;
    }
    Ok(ExactStep {
        policy: StochasticPolicy::from_raw(n, m, probs),
        v,
        q,
        offset,
    })
}

/// Summary of repeated exact replicator steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrace {
    pub iterations: usize,
    /// Largest `v^i(s) − v^{i+1}(s)` seen; non-positive when values never drop.
    pub worst_decrease: f64,
    /// `max_s v*(s) − v(s)` for the last policy evaluated.
    pub final_gap: f64,
    pub reached: bool,
    /// Steps at which the share of `{a : q(s, a) >= v(s)}` shrank somewhere.
    pub partition_violations: usize,
    pub policy: StochasticPolicy,
}

/// Iterates [`exact_replicator_step`] from `init` until the values are
/// within `target` of `v_star` at every state or `max_iters` steps are spent.
/// Each evaluation is warm-started from the previous values.
pub fn exact_replicator_trace(
    mdp: &TabularMdp,
    init: &StochasticPolicy,
    v_star: &[f64],
    target: f64,
    max_iters: usize,
    opts: SolveOptions,
) -> Result<ExactTrace> {
    let mut policy = init.clone();
    let mut prev: Option<Vec<f64>> = None;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    for iter in 0..=max_iters {
        let step = exact_replicator_step(mdp, &policy, prev.as_deref(), opts, Some(0.0))?;
        let v = step.v.as_slice();
        if let Some(p) = &prev {
            for s in 0..n {
                worst = worst.max(p[s] - v[s]);
            }
        }
        let gap = (0..n).map(|s| v_star[s] - v[s]).fold(f64::NEG_INFINITY, f64::max);
        if gap <= target || iter == max_iters {
            return Ok(ExactTrace {
                iterations: iter,
                worst_decrease: worst,
                final_gap: gap,
                reached: gap <= target,
                partition_violations: violations,
                policy,
            });
        }
        let shrank = (0..n).filter(|&s| !mdp.is_absorbing(s)).any(|s| {
            let high = |pi: &StochasticPolicy| -> f64 {
                (0..m).filter(|&a| step.q.get(s, a) >= v[s]).map(|a| pi.prob(s, a)).sum()
            };
            high(&step.policy) < high(&policy) - 1e-12
        });
        violations += usize::from(shrank);
        prev = Some(v.to_vec());
        policy = step.policy;
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn bandit(q0: f64, q1: f64) -> TabularMdp {
        let mut b = MdpBuilder::new(2, 2);
        b.transition(0, 0, &[(1, 1.0, q0)])
            .transition(0, 1, &[(1, 1.0, q1)])
            .goal(1);
        b.build().unwrap()
    }

    #[test]
    fn two_armed_bandit_closed_form() {
        let m = bandit(2.0, 1.0);
        let mut pi = StochasticPolicy::uniform(2, 2);
        pi = exact_replicator_iteration(&m, &pi, 1e-13).unwrap();
        assert!((pi.prob(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        for i in 1..50 {
            pi = exact_replicator_iteration(&m, &pi, 1e-13).unwrap();
            // After k steps the odds are 2^k : 1.
            let k = (i + 1) as i32;
            let expect = 2f64.powi(k) / (2f64.powi(k) + 1.0);
            assert!((pi.prob(0, 0) - expect).abs() < 1e-12);
        }
        assert!((pi.prob(0, 0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_q_is_a_fixed_point() {
        let m = bandit(3.0, 3.0);
        let pi = StochasticPolicy::from_rows(2, vec![vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let out = exact_replicator_iteration(&m, &pi, 1e-13).unwrap();
        assert!((out.prob(0, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn negative_values_need_an_offset() {
        let m = bandit(-2.0, -1.0);
        let pi = StochasticPolicy::uniform(2, 2);
        assert!(matches!(
            exact_replicator_iteration(&m, &pi, 1e-12),
            Err(Error::Positivity { .. })
        ));
        let step = exact_replicator_step(&m, &pi, None, SolveOptions::with_tol(1e-12), None).unwrap();
        assert_eq!(step.offset, 3.0);
        // Shifted q = (1, 2).
        assert!((step.policy.prob(0, 1) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_reaches_bandit_optimum() {
        let m = bandit(2.0, 1.0);
        let v_star = [2.0, 0.0];
        let opts = SolveOptions::with_tol(1e-13);
        let t = exact_replicator_trace(&m, &StochasticPolicy::uniform(2, 2), &v_star, 1e-6, 100, opts).unwrap();
        assert!(t.reached);
        assert!(t.worst_decrease <= 0.0);
        assert_eq!(t.partition_violations, 0);
        // Gap after k steps is 1 / (2^k + 1).
        assert_eq!(t.iterations, 20);
    }
}
