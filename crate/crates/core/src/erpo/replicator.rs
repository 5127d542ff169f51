use super::fitness::FitnessTable;
use crate::error::{Error, Result};
use crate::policy::StochasticPolicy;

/// Replicator step on one row: `x'_a = x_a f_a / Σ_b x_b f_b`.
pub fn replicator_row(row: &[f64], fitness: &[f64], out: &mut [f64], state: usize) -> Result<()> {
    let mut mean = 0.0;
    for (&x, &f) in row.iter().zip(fitness) {
        if x > 0.0 {
            if !(f >= 0.0) {
                return Err(Error::Positivity {
                    state,
                    detail: format!("fitness {f} on an action with share {x}"),
                });
            }
            mean += x * f;
        }
    }
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Positivity {
            state,
            detail: format!("mean fitness {mean}"),
        });
    }
    for ((o, &x), &f) in out.iter_mut().zip(row).zip(fitness) {
        *o = if x > 0.0 { x * f / mean } else { 0.0 };
    }
    Ok(())
}

/// Applies the replicator step to every state visited in the batch.
/// Unvisited actions of a visited state get the state fitness `f(s)`;
/// unvisited states keep their row.
pub fn replicator_update(policy: &StochasticPolicy, fit: &FitnessTable) -> Result<StochasticPolicy> {
    if policy.num_states() != fit.num_states() || policy.num_actions() != fit.num_actions() {
        return Err(Error::Dimension("fitness table does not match policy".into()));
    }
    let m = policy.num_actions();
    let mut probs = policy.as_flat().to_vec();
    let mut f = vec![0.0; m];
    for s in 0..policy.num_states() {
        let Some(fs) = fit.f_s(s) else { continue };
        for (a, slot) in f.iter_mut().enumerate() {
            *slot = fit.f_sa(s, a).unwrap_or(fs);
        }
        replicator_row(policy.row(s), &f, &mut probs[s * m..(s + 1) * m], s)?;
    }
    Ok(StochasticPolicy::from_raw(policy.num_states(), m, probs))
}
