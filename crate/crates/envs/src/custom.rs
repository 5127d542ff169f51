//! Square reach-avoid grid for the path-length comparison.
//!
//! The base grid is open; the shifted grid adds hard obstacles on a fraction
//! of its cells. Episodes start from one of a fixed set of seeded start
//! cells and end at the bottom-right goal.

use erpo_core::mdp::tv_distance;
use erpo_core::rng::stream;
use rand::seq::SliceRandom;

use crate::dynamics::{DynamicsSpec, MoveModel, RewardModel};
use crate::family::{EnvInstance, Family, Level, MAX_REROLLS};
use crate::layout::{Cell, GridLayout};
use crate::EnvError;

pub const NUM_STARTS: usize = 10;

#[derive(Debug, Clone)]
pub struct ReachAvoid {
    pub base: EnvInstance,
    pub shifted: EnvInstance,
}

impl ReachAvoid {
    pub fn starts(&self) -> &[(usize, usize)] {
        &self.base.layout.starts
    }

    pub fn goal(&self) -> (usize, usize) {
        (self.base.layout.height - 1, self.base.layout.width - 1)
    }
}

/// `−1` per step, goal reward and horizon both `8 · size`.
pub fn reach_avoid_dynamics(size: usize) -> DynamicsSpec {
    DynamicsSpec {
        moves: MoveModel::Deterministic,
        rewards: RewardModel {
            step: -1.0,
            goal: 8.0 * size as f64,
            goal_time_penalty: 0.0,
            illegal: 0.0,
        },
        horizon: 8 * size,
        discount: 1.0,
    }
}

pub fn reach_avoid(size: usize, obstacle_fraction: f64, seed: u64) -> Result<ReachAvoid, EnvError> {
    if size < 2 {
        return Err(EnvError::Mismatch(format!("grid size {size} below 2")));
    }
    if !(0.0..0.5).contains(&obstacle_fraction) {
        return Err(EnvError::Mismatch(format!("obstacle fraction {obstacle_fraction} outside [0, 0.5)")));
    }
    let dynamics = reach_avoid_dynamics(size);
    let goal = (size - 1, size - 1);
    let mut rng = stream(seed, &[Family::ReachAvoid as u64]);
    let mut cells: Vec<(usize, usize)> = (0..size)
        .flat_map(|r| (0..size).map(move |c| (r, c)))
        .filter(|&p| p != goal)
        .collect();
    cells.shuffle(&mut rng);
    let mut base = GridLayout::new(size, size);
    base.set(goal.0, goal.1, Cell::Goal);
    base.starts = cells[..NUM_STARTS.min(cells.len())].to_vec();
    let free = &cells[base.starts.len()..];
    let base_env = EnvInstance::from_layout(Family::ReachAvoid, Level::Base, seed, base.clone(), dynamics)?;
    let n = (obstacle_fraction * (size * size) as f64).round() as usize;
    for attempt in 0..MAX_REROLLS {
        let mut rng = stream(seed, &[Family::ReachAvoid as u64, 1, attempt]);
        let mut g = base.clone();
        let mut pool = free.to_vec();
        pool.shuffle(&mut rng);
        for &(r, c) in pool.iter().take(n) {
            g.set(r, c, Cell::HARD_WALL);
        }
        if !g.is_connected() {
            continue;
        }
        let mut shifted = EnvInstance::from_layout(Family::ReachAvoid, Level::L1, seed, g, dynamics)?;
        shifted.beta = tv_distance(&base_env.mdp, &shifted.mdp)?.max;
        return Ok(ReachAvoid { base: base_env, shifted });
    }
    Err(EnvError::Generation(format!(
        "{size}x{size} grid with {obstacle_fraction} obstacles: no connected layout"
    )))
}
