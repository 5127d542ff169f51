//! Gridworld families with seeded distribution shifts.
//!
//! Each family has a base layout and three shifted levels. Shifts add
//! terminal hazards and soft blockers or perturb slip, and every shifted
//! instance records the measured max total-variation distance to its base.

pub mod custom;
pub mod dynamics;
pub mod encoder;
pub mod family;
pub mod graph;
pub mod layout;
pub mod render;
pub mod shaping;

pub use custom::{reach_avoid, ReachAvoid};
pub use dynamics::{DynamicsSpec, MoveModel, RewardModel};
pub use encoder::{DomainState, Encoder};
pub use family::{apply_shift, base_env, build_env, canonical_shift, EnvInstance, Family, Level, ShiftSpec, BETA_HI};
pub use graph::MovementGraph;
pub use layout::{Cell, Dir, Divider, GridLayout};
pub use render::{parse_text_map, render_ascii, to_text_map};
pub use shaping::shape_rewards;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Core(#[from] erpo_core::Error),
    #[error("text map line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mismatch: {0}")]
    Mismatch(String),
}
