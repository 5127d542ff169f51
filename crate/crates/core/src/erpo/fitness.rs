use serde::{Deserialize, Serialize};

use crate::mdp::Trajectory;

/// Which return a visit of `(s, a)` is credited with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessEstimator {
    /// Discounted return from the visit onward; estimates `q(s, a)`.
    #[default]
    ReturnToGo,
    /// Discounted return of the whole episode the visit belongs to.
    FullTrajectory,
}

/// Monte-Carlo fitness `f(s, a)` and `f(s)` with visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTable {
    num_states: usize,
    num_actions: usize,
    sum_sa: Vec<f64>,
    sum_s: Vec<f64>,
    count_sa: Vec<u64>,
    count_s: Vec<u64>,
    /// Constant added to every mean by [`shift_fitness`].
    offset: f64,
}

impl FitnessTable {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            sum_sa: vec![0.0; num_states * num_actions],
            sum_s: vec![0.0; num_states],
            count_sa: vec![0; num_states * num_actions],
            count_s: vec![0; num_states],
            offset: 0.0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Records one visit of `(s, a)` credited with return `g`.
    pub fn record(&mut self, s: usize, a: usize, g: f64) {
        let i = s * self.num_actions + a;
        self.sum_sa[i] += g;
        self.count_sa[i] += 1;
        self.sum_s[s] += g;
        self.count_s[s] += 1;
    }

    pub fn f_sa(&self, s: usize, a: usize) -> Option<f64> {
        let i = s * self.num_actions + a;
        (self.count_sa[i] > 0).then(|| self.sum_sa[i] / self.count_sa[i] as f64 + self.offset)
    }

    pub fn f_s(&self, s: usize) -> Option<f64> {
        (self.count_s[s] > 0).then(|| self.sum_s[s] / self.count_s[s] as f64 + self.offset)
    }

    pub fn count_sa(&self, s: usize, a: usize) -> u64 {
        self.count_sa[s * self.num_actions + a]
    }

    pub fn count_s(&self, s: usize) -> u64 {
        self.count_s[s]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Smallest defined `f(s, a)`.
    pub fn min_f_sa(&self) -> Option<f64> {
        (0..self.num_states)
            .flat_map(|s| (0..self.num_actions).map(move |a| (s, a)))
            .filter_map(|(s, a)| self.f_sa(s, a))
            .reduce(f64::min)
    }

    pub fn visited_states(&self) -> usize {
        self.count_s.iter().filter(|&&c| c > 0).count()
    }
}

/// Every-visit Monte-Carlo fitness over a batch, credited with the
/// return-to-go of each visit.
pub fn estimate_fitness(
    batch: &[Trajectory],
    num_states: usize,
    num_actions: usize,
    gamma: f64,
) -> FitnessTable {
    estimate_fitness_with(batch, num_states, num_actions, gamma, FitnessEstimator::ReturnToGo)
}

pub fn estimate_fitness_with(
    batch: &[Trajectory],
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    estimator: FitnessEstimator,
) -> FitnessTable {
    let mut fit = FitnessTable::new(num_states, num_actions);
    let mut togo = Vec::new();
    for traj in batch {
        togo.clear();
        togo.resize(traj.steps.len(), 0.0);
        let mut g = 0.0;
        for (t, step) in traj.steps.iter().enumerate().rev() {
            g = step.reward + gamma * g;
            togo[t] = g;
        }
        for (t, step) in traj.steps.iter().enumerate() {
            let credit = match estimator {
                FitnessEstimator::ReturnToGo => togo[t],
                FitnessEstimator::FullTrajectory => togo[0],
            };
            fit.record(step.state, step.action, credit);
        }
    }
    fit
}

/// How fitness is made positive before the replicator update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityMode {
    /// If the smallest `f(s, a)` is `<= 0`, shift everything so it becomes `kappa`.
    #[default]
    AffineMin,
    /// Always add `kappa`.
    FixedOffset,
    None,
}

/// Adds one constant to every defined `f(s, a)` and `f(s)`.
pub fn shift_fitness(fit: &FitnessTable, mode: PositivityMode, kappa: f64) -> FitnessTable {
    let mut out = fit.clone();
    let c = match mode {
        PositivityMode::None => 0.0,
        PositivityMode::FixedOffset => kappa,
        PositivityMode::AffineMin => match fit.min_f_sa() {
            Some(m) if m <= 0.0 => kappa - m,
            _ => 0.0,
        },
    };
    out.offset += c;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Step;

    fn traj(steps: &[(usize, usize, f64)]) -> Trajectory {
        Trajectory {
            steps: steps
                .iter()
                .map(|&(state, action, reward)| Step { state, action, reward })
                .collect(),
            final_state: 0,
            truncated: false,
        }
    }

    #[test]
    fn single_visit() {
        let b = vec![traj(&[(0, 1, 0.0), (1, 0, 5.0)])];
        let f = estimate_fitness(&b, 2, 2, 1.0);
        assert_eq!(f.f_sa(0, 1), Some(5.0));
        assert_eq!(f.f_sa(1, 0), Some(5.0));
        assert_eq!(f.f_sa(0, 0), None);
        assert_eq!(f.count_s(0), 1);
    }

    #[test]
    fn two_episodes_average() {
        let b = vec![traj(&[(0, 0, 4.0)]), traj(&[(0, 0, 1.0), (1, 0, 5.0)])];
        let f = estimate_fitness(&b, 2, 1, 1.0);
        assert_eq!(f.f_sa(0, 0), Some(5.0));
    }

    #[test]
    fn every_visit_counts_repeats() {
        let b = vec![traj(&[(0, 0, 1.0), (0, 0, 1.0), (0, 1, 2.0)])];
        let f = estimate_fitness(&b, 1, 2, 1.0);
        assert_eq!(f.count_sa(0, 0), 2);
        assert_eq!(f.f_sa(0, 0), Some((4.0 + 3.0) / 2.0));
        assert_eq!(f.f_s(0), Some((4.0 + 3.0 + 2.0) / 3.0));
        let full = estimate_fitness_with(&b, 1, 2, 1.0, FitnessEstimator::FullTrajectory);
        assert_eq!(full.f_sa(0, 1), Some(4.0));
    }

    #[test]
    fn affine_shift_examples() {
        let b = vec![traj(&[(0, 0, -3.0)]), traj(&[(0, 1, 1.0)])];
        let f = estimate_fitness(&b, 1, 2, 1.0);
        let g = shift_fitness(&f, PositivityMode::AffineMin, 1.0);
        assert_eq!(g.f_sa(0, 0), Some(1.0));
        assert_eq!(g.f_sa(0, 1), Some(5.0));
        assert_eq!(g.f_s(0), Some(3.0));

        let pos = estimate_fitness(&[traj(&[(0, 0, 2.0)])], 1, 2, 1.0);
        assert_eq!(shift_fitness(&pos, PositivityMode::AffineMin, 1.0), pos);
        assert_eq!(shift_fitness(&pos, PositivityMode::FixedOffset, 1.0).f_sa(0, 0), Some(3.0));
        assert_eq!(shift_fitness(&f, PositivityMode::None, 1.0), f);
    }
}
