//! Tabular MDP `(S, A, R, Δ, γ)` with a finite horizon and a goal set.

mod generate;
mod io;
mod trajectory;
mod solve;
mod horizon;
mod tv;

pub use generate::{random_mdp, RandomMdpSpec};
pub use horizon::{horizon_optimum, horizon_policy_return, horizon_policy_values, HorizonSolution};
pub use solve::{
    evaluate_policy_exact, evaluate_policy_from, expected_return, optimal_q, value_iteration,
    QTable, SolveOptions, ValueTable,
};
pub use trajectory::{discounted_return, return_to_go, rollout, rollout_from, Step, Trajectory};
pub use tv::{reachable_states, tv_distance, tv_distance_over, TvReport};

use rand::Rng;

use crate::error::{check_index, Error, Result};
use crate::policy::SIMPLEX_TOL;
use crate::rng::sample_index;

/// One possible outcome of taking an action: next state, its probability,
/// and the reward `r(s, a, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    /// `rows[s * num_actions + a]`: sparse next-state distribution.
    rows: Vec<Vec<Outcome>>,
    goals: Vec<usize>,
    is_goal: Vec<bool>,
    absorbing: Vec<bool>,
    start_dist: Vec<f64>,
    horizon: usize,
    discount: f64,
    goal_time_penalty: f64,
}

/// Incremental constructor; every `(s, a)` row must be set before `build`.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Option<Vec<Outcome>>>,
    goals: Vec<usize>,
    start_dist: Vec<f64>,
    horizon: usize,
    discount: f64,
    goal_time_penalty: f64,
    error: Option<Error>,
}

impl MdpBuilder {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let mut start_dist = vec![0.0; num_states];
        if num_states > 0 {
            start_dist[0] = 1.0;
        }
        Self {
            num_states,
            num_actions,
            rows: vec![None; num_states * num_actions],
            goals: Vec::new(),
            start_dist,
            horizon: 100,
            discount: 1.0,
            goal_time_penalty: 0.0,
            error: None,
        }
    }

    /// Sets the outcome list `(next, prob, reward)` of `(s, a)`. Duplicate
    /// successors are merged; zero-probability entries are dropped.
    pub fn transition(&mut self, s: usize, a: usize, outcomes: &[(usize, f64, f64)]) -> &mut Self {
        let mut row: Vec<Outcome> = Vec::with_capacity(outcomes.len());
        for &(next, prob, reward) in outcomes {
            if prob == 0.0 {
                continue;
            }
            if let Some(o) = row.iter_mut().find(|o| o.next == next) {
                o.prob += prob;
            } else {
                row.push(Outcome { next, prob, reward });
            }
        }
        row.sort_by_key(|o| o.next);
        if s < self.num_states && a < self.num_actions {
            self.rows[s * self.num_actions + a] = Some(row);
        } else if self.error.is_none() {
            self.error = Some(Error::Index {
                what: "state/action",
                index: s * self.num_actions + a,
                limit: self.num_states * self.num_actions,
            });
        }
        self
    }

    /// Same as [`Self::transition`] for every action of `s`.
    pub fn all_actions(&mut self, s: usize, outcomes: &[(usize, f64, f64)]) -> &mut Self {
        for a in 0..self.num_actions {
            self.transition(s, a, outcomes);
        }
        self
    }

    /// Marks `g` as a goal and makes it absorbing with zero reward.
    pub fn goal(&mut self, g: usize) -> &mut Self {
        if !self.goals.contains(&g) {
            self.goals.push(g);
        }
        self.all_actions(g, &[(g, 1.0, 0.0)])
    }

    /// Absorbing non-goal state (episode ends there with nothing further).
    pub fn trap(&mut self, s: usize) -> &mut Self {
        self.all_actions(s, &[(s, 1.0, 0.0)])
    }

    pub fn start(&mut self, dist: Vec<f64>) -> &mut Self {
        self.start_dist = dist;
        self
    }

    pub fn start_state(&mut self, s: usize) -> &mut Self {
        let mut d = vec![0.0; self.num_states];
        if s < self.num_states {
            d[s] = 1.0;
        }
        self.start_dist = d;
        self
    }

    pub fn horizon(&mut self, t: usize) -> &mut Self {
        self.horizon = t;
        self
    }

    pub fn discount(&mut self, gamma: f64) -> &mut Self {
        self.discount = gamma;
        self
    }

    pub fn goal_time_penalty(&mut self, c: f64) -> &mut Self {
        self.goal_time_penalty = c;
        self
    }

    pub fn build(&self) -> Result<TabularMdp> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            match r {
                Some(r) => rows.push(r.clone()),
                None => {
                    return Err(Error::Model(format!(
                        "no transition for state {} action {}",
                        i / self.num_actions.max(1),
                        i % self.num_actions.max(1)
                    )))
                }
            }
        }
        TabularMdp::new(
            self.num_states,
            self.num_actions,
            rows,
            self.goals.clone(),
            self.start_dist.clone(),
            self.horizon,
            self.discount,
        )
        .and_then(|m| m.with_goal_time_penalty(self.goal_time_penalty))
    }
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        rows: Vec<Vec<Outcome>>,
        goals: Vec<usize>,
        start_dist: Vec<f64>,
        horizon: usize,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Model("need at least one state and one action".into()));
        }
        if rows.len() != num_states * num_actions {
            return Err(Error::Dimension(format!(
                "{} rows for {num_states}x{num_actions}",
                rows.len()
            )));
        }
        if horizon == 0 {
            return Err(Error::Model("horizon must be positive".into()));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::Model(format!("discount {discount} outside (0, 1]")));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut sum = 0.0;
            for o in row {
                check_index("next state", o.next, num_states)?;
                if !(o.prob >= 0.0) || !o.reward.is_finite() {
                    return Err(Error::Distribution(format!(
                        "bad outcome {o:?} in row ({}, {})",
                        i / num_actions,
                        i % num_actions
                    )));
                }
                sum += o.prob;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Distribution(format!(
                    "row ({}, {}) sums to {sum}",
                    i / num_actions,
                    i % num_actions
                )));
            }
        }
        let mut is_goal = vec![false; num_states];
        for &g in &goals {
            check_index("goal", g, num_states)?;
            is_goal[g] = true;
        }
        let absorbing: Vec<bool> = (0..num_states)
            .map(|s| {
                (0..num_actions).all(|a| {
                    let row = &rows[s * num_actions + a];
                    row.len() == 1 && row[0].next == s && row[0].reward == 0.0
                })
            })
            .collect();
        for &g in &goals {
            if !absorbing[g] {
                return Err(Error::Model(format!("goal {g} is not absorbing with zero reward")));
            }
        }
        if start_dist.len() != num_states {
            return Err(Error::Dimension(format!(
                "start distribution over {} states, expected {num_states}",
                start_dist.len()
            )));
        }
        crate::policy::check_simplex(&start_dist)?;
        if goals.iter().any(|&g| start_dist[g] > 0.0) {
            return Err(Error::Model("start distribution puts mass on a goal".into()));
        }
        let mut goals = goals;
        goals.sort_unstable();
        goals.dedup();
        Ok(Self {
            num_states,
            num_actions,
            rows,
            goals,
            is_goal,
            absorbing,
            start_dist,
            horizon,
            discount,
            goal_time_penalty: 0.0,
        })
    }

    /// Goal-entry rewards are reduced by `c * t`, where `t` is the number of
    /// steps taken when the goal is entered. Models the `R - t` terminal
    /// reward used by several gridworlds.
    pub fn with_goal_time_penalty(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::Model(format!("goal time penalty {c} must be >= 0")));
        }
        self.goal_time_penalty = c;
        Ok(self)
    }

    pub fn with_discount(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Model(format!("discount {gamma} outside (0, 1]")));
        }
        self.discount = gamma;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Model("horizon must be positive".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_start(mut self, start_dist: Vec<f64>) -> Result<Self> {
        if start_dist.len() != self.num_states {
            return Err(Error::Dimension("start distribution length".into()));
        }
        crate::policy::check_simplex(&start_dist)?;
        if self.goals.iter().any(|&g| start_dist[g] > 0.0) {
            return Err(Error::Model("start distribution puts mass on a goal".into()));
        }
        self.start_dist = start_dist;
        Ok(self)
    }

    /// Same dynamics with every reward replaced by `f(s, a, s', r)`.
    /// Goal self-loops keep their zero reward.
    pub fn map_rewards(&self, mut f: impl FnMut(usize, usize, usize, f64) -> f64) -> Result<Self> {
        let mut out = self.clone();
        for s in 0..self.num_states {
            if self.is_goal[s] {
                continue;
            }
            for a in 0..self.num_actions {
                for o in &mut out.rows[s * self.num_actions + a] {
                    o.reward = f(s, a, o.next, o.reward);
                }
            }
        }
        // Recompute the absorbing flags; a shaped trap self-loop may no longer be absorbing.
        TabularMdp::new(
            out.num_states,
            out.num_actions,
            out.rows,
            out.goals,
            out.start_dist,
            out.horizon,
            out.discount,
        )
        .and_then(|m| m.with_goal_time_penalty(self.goal_time_penalty))
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn goal_time_penalty(&self) -> f64 {
        self.goal_time_penalty
    }

    pub fn goals(&self) -> &[usize] {
        &self.goals
    }

    pub fn is_goal(&self, s: usize) -> bool {
        self.is_goal[s]
    }

    /// Goals and traps: every action self-loops with zero reward.
    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start_dist
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.rows[s * self.num_actions + a]
    }

    /// Probability of `s'` under `(s, a)`.
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.prob)
    }

    /// `r(s, a, s')`; zero for transitions that cannot occur.
    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.reward)
    }

    /// Dense next-state distribution of `(s, a)`.
    pub fn dense_row(&self, s: usize, a: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.num_states];
        for o in self.outcomes(s, a) {
            row[o.next] += o.prob;
        }
        row
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        check_index("state", s, self.num_states)
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        check_index("action", a, self.num_actions)
    }

    pub fn check_policy(&self, policy: &crate::policy::StochasticPolicy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(Error::Dimension(format!(
                "policy {}x{} for mdp {}x{}",
                policy.num_states(),
                policy.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    /// Draws `(s', r(s, a, s'))` from `Δ(· | s, a)`.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<(usize, f64)> {
        self.check_state(s)?;
        self.check_action(a)?;
        let o = self.draw(s, a, rng);
        Ok((o.next, o.reward))
    }

    fn draw<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Outcome {
        let row = self.outcomes(s, a);
        if row.len() == 1 {
            return row[0];
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for o in row {
            acc += o.prob;
            if u < acc {
                return *o;
            }
        }
        *row.last().expect("validated rows are non-empty")
    }

    /// One environment step at time index `t` (0-based): like
    /// [`Self::sample_transition`] but applies the goal time penalty.
    /// Indices are assumed valid.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, t: usize, rng: &mut R) -> (usize, f64) {
        let o = self.draw(s, a, rng);
        (o.next, self.realized_reward(s, o.next, o.reward, t))
    }

    /// Reward actually paid for `s -> next` at step index `t`: goal entries
    /// lose `goal_time_penalty · (t + 1)`.
    #[inline]
    pub fn realized_reward(&self, s: usize, next: usize, reward: f64, t: usize) -> f64 {
        if self.goal_time_penalty != 0.0 && self.is_goal[next] && !self.is_goal[s] {
            reward - self.goal_time_penalty * (t + 1) as f64
        } else {
            reward
        }
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.start_dist, rng)
    }

    /// Largest goal-entry reward over the largest absolute non-goal reward.
    /// Sparse-reward models have a ratio well above one.
    pub fn sparsity_ratio(&self) -> f64 {
        let mut goal = 0.0f64;
        let mut step = 0.0f64;
        for s in 0..self.num_states {
            if self.absorbing[s] {
                continue;
            }
            for a in 0..self.num_actions {
                for o in self.outcomes(s, a) {
                    if self.is_goal[o.next] {
                        goal = goal.max(o.reward);
                    } else {
                        step = step.max(o.reward.abs());
                    }
                }
            }
        }
        if step == 0.0 {
            f64::INFINITY
        } else {
            goal / step
        }
    }
}
