//! Environment families, their canonical levels, and shift generation.

use std::fmt;
use std::str::FromStr;

use erpo_core::mdp::tv_distance;
use erpo_core::rng::stream;
use erpo_core::TabularMdp;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dynamics::{compile, DynamicsSpec, MoveModel, RewardModel};
use crate::encoder::Encoder;
use crate::layout::{Cell, Divider, GridLayout};
use crate::EnvError;

/// Largest shift any generated level may have.
pub const BETA_HI: f64 = 0.4;

/// Attempts before a layout or shift is declared infeasible.
pub const MAX_REROLLS: u64 = 100;

/// Seed of the base layouts. Level hazards use the caller's seed.
const BASE_SEED: u64 = 0xB45E_1A70;

/// Measured β may fall this far below a level's target before re-rolling.
const TARGET_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "FL")]
    FrozenLake,
    #[serde(rename = "CW")]
    CliffWalking,
    #[serde(rename = "TX")]
    Taxi,
    #[serde(rename = "MGDS")]
    DistShift,
    #[serde(rename = "MGWL")]
    WallsLava,
    /// Open grid used by the path-length experiment.
    #[serde(rename = "RA")]
    ReachAvoid,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::FrozenLake,
        Family::CliffWalking,
        Family::Taxi,
        Family::DistShift,
        Family::WallsLava,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Family::FrozenLake => "FL",
            Family::CliffWalking => "CW",
            Family::Taxi => "TX",
            Family::DistShift => "MGDS",
            Family::WallsLava => "MGWL",
            Family::ReachAvoid => "RA",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }

    pub fn dynamics(self) -> DynamicsSpec {
        let rewards = |step, goal, goal_time_penalty| RewardModel {
            step,
            goal,
            goal_time_penalty,
            illegal: 0.0,
        };
        match self {
            Family::FrozenLake => DynamicsSpec {
                moves: MoveModel::Slippery,
                rewards: rewards(0.0, 500.0, 1.0),
                horizon: 500,
                discount: 1.0,
            },
            Family::CliffWalking => DynamicsSpec {
                moves: MoveModel::Deterministic,
                rewards: rewards(-1.0, 500.0, 0.0),
                horizon: 2000,
                discount: 1.0,
            },
            Family::Taxi => DynamicsSpec {
                moves: MoveModel::Taxi,
                rewards: RewardModel {
                    illegal: -10.0,
                    ..rewards(-1.0, 2500.0, 0.0)
                },
                horizon: 2000,
                discount: 1.0,
            },
            Family::DistShift | Family::WallsLava => DynamicsSpec {
                moves: MoveModel::Oriented,
                rewards: rewards(0.0, 2000.0, 1.0),
                horizon: 2000,
                discount: 1.0,
            },
            Family::ReachAvoid => DynamicsSpec {
                moves: MoveModel::Deterministic,
                rewards: rewards(-1.0, 0.0, 0.0),
                horizon: 0,
                discount: 1.0,
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Family {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, EnvError> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "FL" | "FROZENLAKE" => Family::FrozenLake,
            "CW" | "CLIFFWALKING" => Family::CliffWalking,
            "TX" | "TAXI" => Family::Taxi,
            "MGDS" => Family::DistShift,
            "MGWL" => Family::WallsLava,
            "RA" => Family::ReachAvoid,
            _ => return Err(EnvError::Mismatch(format!("unknown family {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "base", alias = "Base")]
    Base,
    #[serde(rename = "L1", alias = "l1")]
    L1,
    #[serde(rename = "L2", alias = "l2")]
    L2,
    #[serde(rename = "L3", alias = "l3")]
    L3,
}

impl Level {
    pub const SHIFTED: [Level; 3] = [Level::L1, Level::L2, Level::L3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Level::Base => "base",
            Level::L1 => "L1",
            Level::L2 => "L2",
            Level::L3 => "L3",
        }
    }

    /// β each shifted level aims for.
    pub fn target_beta(self) -> f64 {
        match self {
            Level::Base => 0.0,
            Level::L1 => 0.15,
            Level::L2 => 0.25,
            Level::L3 => 0.35,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Level {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, EnvError> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "base" | "l0" | "0" => Level::Base,
            "l1" | "1" => Level::L1,
            "l2" | "2" => Level::L2,
            "l3" | "3" => Level::L3,
            _ => return Err(EnvError::Mismatch(format!("unknown level {s:?}"))),
        })
    }
}

/// How to derive a shifted instance from a base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub family: Family,
    pub level: Level,
    /// Fraction of free cells turned into terminal hazards (holes or lava).
    pub hazard_density: f64,
    /// Fraction of free cells (taxi: free vertical edges) given a soft
    /// blocker that acts with probability tied to `target_beta`.
    pub blocker_density: f64,
    pub target_beta: f64,
    /// Change slip so that it alone moves the kernel by `target_beta`.
    pub perturb_dynamics: bool,
    pub seed: u64,
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |what: &str| Err(EnvError::Mismatch(format!("shift spec: {what}")));
        if !(0.0..=1.0).contains(&self.hazard_density) {
            return bad("hazard_density outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.blocker_density) {
            return bad("blocker_density outside [0, 1]");
        }
        if !(self.target_beta > 0.0 && self.target_beta <= BETA_HI) {
            return bad("target_beta outside (0, 0.4]");
        }
        Ok(())
    }

    fn has_mechanism(&self) -> bool {
        self.blocker_density > 0.0 || self.perturb_dynamics
    }
}

/// The level table.
pub fn canonical_shift(family: Family, level: Level, seed: u64) -> Option<ShiftSpec> {
    let k = match level {
        Level::Base => return None,
        Level::L1 => 0,
        Level::L2 => 1,
        Level::L3 => 2,
    };
    let pick = |v: [f64; 3]| v[k];
    let (hazard, blocker, perturb) = match family {
        Family::FrozenLake => (pick([0.04, 0.07, 0.10]), 0.0, true),
        Family::CliffWalking => (0.0, pick([0.05, 0.09, 0.13]), false),
        Family::Taxi => (0.0, pick([0.10, 0.20, 0.30]), false),
        Family::DistShift => (pick([0.05, 0.09, 0.13]), 0.0, true),
        Family::WallsLava => (pick([0.08, 0.0, 0.08]), pick([0.0, 0.12, 0.12]), true),
        Family::ReachAvoid => return None,
    };
    Some(ShiftSpec {
        family,
        level,
        hazard_density: hazard,
        blocker_density: blocker,
        target_beta: level.target_beta(),
        perturb_dynamics: perturb,
        seed,
    })
}

/// An environment ready for planning and rollouts. Immutable once built.
#[derive(Debug, Clone)]
pub struct EnvInstance {
    pub family: Family,
    pub level: Level,
    pub seed: u64,
    pub layout: GridLayout,
    pub dynamics: DynamicsSpec,
    pub mdp: TabularMdp,
    pub encoder: Encoder,
    /// Measured max TV distance to the base instance; 0 for a base.
    pub beta: f64,
}

impl EnvInstance {
    pub fn from_layout(
        family: Family,
        level: Level,
        seed: u64,
        layout: GridLayout,
        dynamics: DynamicsSpec,
    ) -> Result<Self, EnvError> {
        let (mdp, encoder) = compile(&layout, &dynamics)?;
        Ok(Self {
            family,
            level,
            seed,
            layout,
            dynamics,
            mdp,
            encoder,
            beta: 0.0,
        })
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.family, self.level)
    }
}

/// Cells that may receive hazards or blockers.
fn free_cells(g: &GridLayout) -> Vec<(usize, usize)> {
    (0..g.height)
        .flat_map(|r| (0..g.width).map(move |c| (r, c)))
        .filter(|&(r, c)| g.get(r, c).is_floor() && !g.starts.contains(&(r, c)) && !g.stations.contains(&(r, c)))
        .collect()
}

fn sprinkle(g: &mut GridLayout, density: f64, cell: Cell, rng: &mut erpo_core::rng::Rng) {
    let mut free = free_cells(g);
    free.shuffle(rng);
    let n = (density * free.len() as f64).round() as usize;
    for &(r, c) in free.iter().take(n) {
        g.set(r, c, cell);
    }
}

fn base_layout(family: Family) -> Result<GridLayout, EnvError> {
    for attempt in 0..MAX_REROLLS {
        let mut rng = stream(BASE_SEED, &[family.id(), attempt]);
        let g = match family {
            Family::FrozenLake => {
                let mut g = GridLayout::new(12, 12);
                g.starts.push((0, 0));
                g.set(11, 11, Cell::Goal);
                g.slip = 1.0 / 3.0;
                sprinkle(&mut g, 0.08, Cell::Hole, &mut rng);
                g
            }
            Family::CliffWalking => {
                let mut g = GridLayout::new(12, 16);
                g.starts.push((11, 0));
                g.set(11, 15, Cell::Goal);
                for c in 1..15 {
                    g.set(11, c, Cell::HARD_CLIFF);
                }
                g
            }
            Family::Taxi => {
                let mut g = GridLayout::new(10, 10);
                g.stations = vec![(0, 0), (0, 9), (9, 0), (9, 7)];
                g.starts = (0..10).flat_map(|r| (0..10).map(move |c| (r, c))).collect();
                for (rows, col) in [(0..4, 3), (6..10, 1), (6..10, 5)] {
                    for row in rows {
                        g.dividers.push(Divider { row, col, block: 1.0 });
                    }
                }
                g
            }
            Family::DistShift => {
                let mut g = GridLayout::walled(9, 9);
                g.starts.push((1, 1));
                g.set(7, 7, Cell::Goal);
                sprinkle(&mut g, 0.06, Cell::Lava, &mut rng);
                g
            }
            Family::WallsLava => {
                let mut g = GridLayout::walled(11, 11);
                g.starts.push((1, 1));
                g.set(9, 9, Cell::Goal);
                // A dividing wall with one random gap.
                let gap = rng.gen_range(1..10);
                for r in (1..10).filter(|&r| r != gap) {
                    g.set(r, 5, Cell::HARD_WALL);
                }
                g
            }
            Family::ReachAvoid => {
                return Err(EnvError::Mismatch("reach-avoid grids are built by `reach_avoid`".into()))
            }
        };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(EnvError::Generation(format!("{family}: no connected base layout")))
}

pub fn base_env(family: Family) -> Result<EnvInstance, EnvError> {
    EnvInstance::from_layout(family, Level::Base, 0, base_layout(family)?, family.dynamics())
}

/// Canonical instance of a family at a level. `seed` varies the placement
/// of level hazards; canonical instances use seed 0.
pub fn build_env(family: Family, level: Level, seed: u64) -> Result<EnvInstance, EnvError> {
    let base = base_env(family)?;
    match canonical_shift(family, level, seed) {
        None => Ok(EnvInstance { seed, ..base }),
        Some(spec) => apply_shift(&base, &spec),
    }
}

/// Adds hazards and blockers to `base` and perturbs its slip as `spec`
/// asks, re-rolling placements until the layout stays connected and the
/// measured β is at most [`BETA_HI`] and near the target.
pub fn apply_shift(base: &EnvInstance, spec: &ShiftSpec) -> Result<EnvInstance, EnvError> {
    spec.validate()?;
    if spec.family != base.family {
        return Err(EnvError::Mismatch(format!(
            "shift for {} applied to {}",
            spec.family, base.family
        )));
    }
    let beta = spec.target_beta;
    let oriented = base.dynamics.moves == MoveModel::Oriented;
    // Chained with a slip failure on oriented moves, blockers act with `p`
    // so that `(1 − p)²` passes through.
    let blocked_slip = 1.0 - (1.0 - beta).sqrt();
    let block = if oriented && spec.perturb_dynamics { blocked_slip } else { beta };
    let mut last = None;
    for attempt in 0..MAX_REROLLS {
        let mut rng = stream(spec.seed, &[spec.family.id(), spec.level.index() as u64, attempt]);
        let mut g = base.layout.clone();
        if spec.perturb_dynamics {
            g.slip = match base.dynamics.moves {
                MoveModel::Slippery => (base.layout.slip - beta / 2.0).max(0.0),
                MoveModel::Oriented if spec.blocker_density > 0.0 => blocked_slip,
                _ => beta,
            };
        }
        let hazard = if oriented { Cell::Lava } else { Cell::Hole };
        sprinkle(&mut g, spec.hazard_density, hazard, &mut rng);
        if spec.blocker_density > 0.0 {
            match base.family {
                Family::Taxi => {
                    let mut edges: Vec<(usize, usize)> = (0..g.height)
                        .flat_map(|r| (0..g.width - 1).map(move |c| (r, c)))
                        .filter(|&(r, c)| !g.has_divider(r, c))
                        .collect();
                    edges.shuffle(&mut rng);
                    let n = (spec.blocker_density * edges.len() as f64).round() as usize;
                    for &(row, col) in edges.iter().take(n) {
                        g.dividers.push(Divider { row, col, block });
                    }
                }
                Family::CliffWalking => sprinkle(&mut g, spec.blocker_density, Cell::Cliff { chance: block }, &mut rng),
                _ => sprinkle(&mut g, spec.blocker_density, Cell::Wall { block }, &mut rng),
            }
        }
        if !g.is_connected() {
            continue;
        }
        let mut env = EnvInstance::from_layout(base.family, spec.level, spec.seed, g, base.dynamics)?;
        let measured = tv_distance(&base.mdp, &env.mdp)?.max;
        env.beta = measured;
        let near = !spec.has_mechanism() || measured >= beta - TARGET_SLACK;
        if measured <= BETA_HI + 1e-12 && near {
            return Ok(env);
        }
        last = Some(measured);
    }
    Err(EnvError::Generation(match last {
        Some(b) => format!("{} {}: measured β {b:.3} misses target {beta}", spec.family, spec.level),
        None => format!("{} {}: no connected layout", spec.family, spec.level),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_canonical_instance_builds() {
        for fam in Family::ALL {
            let base = base_env(fam).unwrap();
            assert_eq!(base.beta, 0.0);
            for level in Level::SHIFTED {
                let env = build_env(fam, level, 0).unwrap();
                assert!(env.beta <= BETA_HI, "{fam} {level}: {}", env.beta);
                assert!(
                    (env.beta - level.target_beta()).abs() < 1e-9,
                    "{fam} {level}: {}",
                    env.beta
                );
                assert_eq!(env.mdp.num_states(), base.mdp.num_states());
            }
        }
    }

    #[test]
    fn sizes() {
        let n = |f| base_env(f).unwrap().mdp.num_states();
        assert_eq!(n(Family::FrozenLake), 144);
        assert_eq!(n(Family::CliffWalking), 192);
        assert_eq!(n(Family::Taxi), 2001);
        assert_eq!(n(Family::DistShift), 81 * 4);
        assert_eq!(n(Family::WallsLava), 121 * 4);
    }

    #[test]
    fn empty_shift_measures_zero() {
        let base = base_env(Family::FrozenLake).unwrap();
        let spec = ShiftSpec {
            family: Family::FrozenLake,
            level: Level::L1,
            hazard_density: 0.0,
            blocker_density: 0.0,
            target_beta: 0.3,
            perturb_dynamics: false,
            seed: 4,
        };
        assert_eq!(apply_shift(&base, &spec).unwrap().beta, 0.0);
    }

    #[test]
    fn frozen_lake_target_point_three() {
        let base = base_env(Family::FrozenLake).unwrap();
        let spec = ShiftSpec {
            family: Family::FrozenLake,
            level: Level::L2,
            hazard_density: 0.05,
            blocker_density: 0.0,
            target_beta: 0.3,
            perturb_dynamics: true,
            seed: 11,
        };
        let env = apply_shift(&base, &spec).unwrap();
        assert!((0.2..=0.4).contains(&env.beta), "{}", env.beta);
    }

    #[test]
    fn bad_specs_rejected() {
        let base = base_env(Family::CliffWalking).unwrap();
        let mut spec = canonical_shift(Family::CliffWalking, Level::L1, 0).unwrap();
        spec.target_beta = 0.5;
        assert!(matches!(apply_shift(&base, &spec), Err(EnvError::Mismatch(_))));
        let spec = canonical_shift(Family::Taxi, Level::L1, 0).unwrap();
        assert!(matches!(apply_shift(&base, &spec), Err(EnvError::Mismatch(_))));
    }

    #[test]
    fn seeds_vary_placement() {
        let a = build_env(Family::DistShift, Level::L2, 0).unwrap();
        let b = build_env(Family::DistShift, Level::L2, 1).unwrap();
        let c = build_env(Family::DistShift, Level::L2, 0).unwrap();
        assert_ne!(a.layout, b.layout);
        assert_eq!(a.layout, c.layout);
    }

    #[test]
    fn names_parse_back() {
        for f in Family::ALL {
            assert_eq!(f.code().parse::<Family>().unwrap(), f);
        }
        for l in [Level::Base, Level::L1, Level::L2, Level::L3] {
            assert_eq!(l.code().parse::<Level>().unwrap(), l);
        }
    }
}
