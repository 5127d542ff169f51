//! Replicator-dynamics policy adaptation.
//!
//! Each state's action distribution is treated as a population; actions with
//! above-average fitness (return) grow their share, the rest shrink.

mod exact;
mod fitness;
mod replicator;
mod train;

pub use exact::{exact_replicator_iteration, exact_replicator_step, exact_replicator_trace, ExactStep, ExactTrace};
pub use fitness::{
    estimate_fitness, estimate_fitness_with, shift_fitness, FitnessEstimator, FitnessTable, PositivityMode,
};
pub use replicator::{replicator_row, replicator_update};
pub use train::{
    erpo_train, reward_scale, sample_batch, ErpoConfig, ErpoResult, ErpoTrainer, EtaMode, IterRecord,
    TrainHistory,
};

use crate::error::{Error, Result};
use crate::policy::StochasticPolicy;

/// Row-wise `w π_old + (1 − w) π_new`.
pub fn mix_policies(pi_old: &StochasticPolicy, pi_new: &StochasticPolicy, w: f64) -> Result<StochasticPolicy> {
    pi_old.same_shape(pi_new)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Config {
            field: "w",
            reason: format!("mixture weight {w} outside [0, 1]"),
        });
    }
    if w == 1.0 {
        return Ok(pi_old.clone());
    }
    if w == 0.0 {
        return Ok(pi_new.clone());
    }
    let probs = pi_old
        .as_flat()
        .iter()
        .zip(pi_new.as_flat())
        .map(|(a, b)| w * a + (1.0 - w) * b)
        .collect();
    Ok(StochasticPolicy::from_raw(pi_old.num_states(), pi_old.num_actions(), probs))
}

/// `max(w − ν, ε)`.
pub fn decay_weight(w: f64, nu: f64, eps: f64) -> f64 {
    (w - nu).max(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_endpoints_and_midpoint() {
        let a = StochasticPolicy::from_rows(2, vec![vec![1.0, 0.0]]).unwrap();
        let b = StochasticPolicy::from_rows(2, vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(mix_policies(&a, &b, 1.0).unwrap(), a);
        assert_eq!(mix_policies(&a, &b, 0.0).unwrap(), b);
        assert_eq!(mix_policies(&a, &b, 0.5).unwrap().row(0), &[0.5, 0.5]);
        assert!(mix_policies(&a, &StochasticPolicy::uniform(2, 2), 0.5).is_err());
    }

    #[test]
    fn decay_examples() {
        assert!((decay_weight(0.5, 0.2, 0.1) - 0.3).abs() < 1e-15);
        assert_eq!(decay_weight(0.15, 0.2, 0.1), 0.1);
        assert_eq!(decay_weight(0.1, 0.2, 0.1), 0.1);
    }
}
