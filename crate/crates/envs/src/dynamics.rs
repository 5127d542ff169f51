//! Compiles a [`GridLayout`] into a [`TabularMdp`].

use erpo_core::{MdpBuilder, TabularMdp};
use serde::{Deserialize, Serialize};

use crate::encoder::{heading_index, DomainState, Encoder, HEADINGS};
use crate::layout::{Cell, Dir, GridLayout};
use crate::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveModel {
    /// Compass moves; the intended move happens with `1 − 2·slip`, each
    /// perpendicular one with `slip`.
    Slippery,
    /// Compass moves, no slip.
    Deterministic,
    /// Turn left, turn right, forward; forward fails with `slip`.
    Oriented,
    /// Compass moves plus pickup and dropoff.
    Taxi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    /// Every transition.
    pub step: f64,
    /// Added on goal entry (or correct dropoff).
    pub goal: f64,
    /// Goal reward drops by this much per elapsed step.
    pub goal_time_penalty: f64,
    /// Taxi pickup or dropoff where it is not allowed.
    pub illegal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub moves: MoveModel,
    pub rewards: RewardModel,
    pub horizon: usize,
    pub discount: f64,
}

/// Action names in index order.
pub fn action_names(moves: MoveModel) -> &'static [&'static str] {
    match moves {
        MoveModel::Slippery | MoveModel::Deterministic => &["north", "east", "south", "west"],
        MoveModel::Oriented => &["left", "right", "forward"],
        MoveModel::Taxi => &["south", "north", "east", "west", "pickup", "dropoff"],
    }
}

pub const TAXI_MOVES: [Dir; 4] = [Dir::South, Dir::North, Dir::East, Dir::West];

/// Outcomes of trying to move `d` from `(r, c)`: `(cell, prob)` pairs,
/// accounting for soft walls, dividers, and cliffs.
pub fn attempt(layout: &GridLayout, r: usize, c: usize, d: Dir) -> Vec<((usize, usize), f64)> {
    let Some((nr, nc)) = layout.passable(r, c, d) else {
        return vec![((r, c), 1.0)];
    };
    let wall = match layout.get(nr, nc) {
        Cell::Wall { block } => block,
        _ => 0.0,
    };
    let pass = (1.0 - layout.divider_block(r, c, d)) * (1.0 - wall);
    let mut out = Vec::with_capacity(3);
    if pass < 1.0 {
        out.push(((r, c), 1.0 - pass));
    }
    match layout.get(nr, nc) {
        Cell::Cliff { chance } => {
            let home = layout.starts[0];
            if chance > 0.0 {
                out.push((home, pass * chance));
            }
            if chance < 1.0 {
                out.push(((nr, nc), pass * (1.0 - chance)));
            }
        }
        _ => out.push(((nr, nc), pass)),
    }
    out
}

pub fn encoder_for(layout: &GridLayout, moves: MoveModel) -> Encoder {
    let (height, width) = (layout.height, layout.width);
    match moves {
        MoveModel::Slippery | MoveModel::Deterministic => Encoder::Grid { height, width },
        MoveModel::Oriented => Encoder::Oriented { height, width },
        MoveModel::Taxi => Encoder::Taxi {
            height,
            width,
            stations: layout.stations.len(),
        },
    }
}

fn start_dist(layout: &GridLayout, enc: &Encoder) -> Vec<f64> {
    let mut dist = vec![0.0; enc.num_states()];
    match *enc {
        Encoder::Taxi { stations, .. } => {
            let mut picks = Vec::new();
            for &(row, col) in &layout.starts {
                for passenger in 0..stations {
                    for destination in (0..stations).filter(|&d| d != passenger) {
                        picks.push(DomainState::Taxi { row, col, passenger, destination });
                    }
                }
            }
            for s in &picks {
                dist[enc.encode(*s).expect("start inside grid")] = 1.0 / picks.len() as f64;
            }
        }
        Encoder::Oriented { .. } => {
            for &(row, col) in &layout.starts {
                let i = enc.encode(DomainState::Oriented { row, col, dir: Dir::East }).expect("start inside grid");
                dist[i] = 1.0 / layout.starts.len() as f64;
            }
        }
        Encoder::Grid { .. } => {
            for &(row, col) in &layout.starts {
                dist[enc.encode(DomainState::Cell { row, col }).expect("start inside grid")] =
                    1.0 / layout.starts.len() as f64;
            }
        }
    }
    dist
}

pub fn compile(layout: &GridLayout, spec: &DynamicsSpec) -> Result<(TabularMdp, Encoder), EnvError> {
    if layout.starts.is_empty() {
        return Err(EnvError::Generation("layout has no start".into()));
    }
    let enc = encoder_for(layout, spec.moves);
    let mdp = match spec.moves {
        MoveModel::Slippery | MoveModel::Deterministic => compass(layout, spec, &enc)?,
        MoveModel::Oriented => oriented(layout, spec, &enc)?,
        MoveModel::Taxi => taxi(layout, spec, &enc)?,
    };
    Ok((mdp, enc))
}

fn finish(mut b: MdpBuilder, layout: &GridLayout, spec: &DynamicsSpec, enc: &Encoder) -> Result<TabularMdp, EnvError> {
    b.start(start_dist(layout, enc))
        .horizon(spec.horizon)
        .discount(spec.discount)
        .goal_time_penalty(spec.rewards.goal_time_penalty);
    Ok(b.build()?)
}

fn compass(layout: &GridLayout, spec: &DynamicsSpec, enc: &Encoder) -> Result<TabularMdp, EnvError> {
    let n = enc.num_states();
    let mut b = MdpBuilder::new(n, 4);
    let slip = if spec.moves == MoveModel::Slippery { layout.slip } else { 0.0 };
    let rw = spec.rewards;
    for r in 0..layout.height {
        for c in 0..layout.width {
            let s = layout.index(r, c);
            match layout.get(r, c) {
                Cell::Goal => {
                    b.goal(s);
                    continue;
                }
                Cell::Hole | Cell::Lava => {
                    b.trap(s);
                    continue;
                }
                _ => {}
            }
            for (a, d) in Dir::ALL.into_iter().enumerate() {
                let mut tries = vec![(d, 1.0 - 2.0 * slip)];
                if slip > 0.0 {
                    tries.push((d.left(), slip));
                    tries.push((d.right(), slip));
                }
                let mut outs = Vec::new();
                for (dir, p) in tries {
                    for ((nr, nc), q) in attempt(layout, r, c, dir) {
                        let reward = rw.step + if layout.get(nr, nc) == Cell::Goal { rw.goal } else { 0.0 };
                        outs.push((layout.index(nr, nc), p * q, reward));
                    }
                }
                b.transition(s, a, &outs);
            }
        }
    }
    finish(b, layout, spec, enc)
}

fn oriented(layout: &GridLayout, spec: &DynamicsSpec, enc: &Encoder) -> Result<TabularMdp, EnvError> {
    let n = enc.num_states();
    let mut b = MdpBuilder::new(n, 3);
    let rw = spec.rewards;
    let idx = |row: usize, col: usize, dir: Dir| (row * layout.width + col) * 4 + heading_index(dir);
    for r in 0..layout.height {
        for c in 0..layout.width {
            for dir in HEADINGS {
                let s = idx(r, c, dir);
                match layout.get(r, c) {
                    Cell::Goal => {
                        b.goal(s);
                        continue;
                    }
                    Cell::Hole | Cell::Lava => {
                        b.trap(s);
                        continue;
                    }
                    _ => {}
                }
                b.transition(s, 0, &[(idx(r, c, dir.left()), 1.0, rw.step)]);
                b.transition(s, 1, &[(idx(r, c, dir.right()), 1.0, rw.step)]);
                let mut outs = Vec::new();
                for ((nr, nc), q) in attempt(layout, r, c, dir) {
                    let moved = (nr, nc) != (r, c);
                    let q = if moved { q * (1.0 - layout.slip) } else { q };
                    if moved && layout.slip > 0.0 {
                        outs.push((s, q / (1.0 - layout.slip) * layout.slip, rw.step));
                    }
                    let reward = rw.step + if layout.get(nr, nc) == Cell::Goal { rw.goal } else { 0.0 };
                    outs.push((idx(nr, nc, dir), q, reward));
                }
                b.transition(s, 2, &outs);
            }
        }
    }
    finish(b, layout, spec, enc)
}

fn taxi(layout: &GridLayout, spec: &DynamicsSpec, enc: &Encoder) -> Result<TabularMdp, EnvError> {
    let Encoder::Taxi { stations: k, .. } = *enc else { unreachable!() };
    if k < 2 {
        return Err(EnvError::Generation("taxi needs at least two stations".into()));
    }
    let n = enc.num_states();
    let done = n - 1;
    let rw = spec.rewards;
    let mut b = MdpBuilder::new(n, 6);
    let code = |row, col, passenger, destination| {
        enc.encode(DomainState::Taxi { row, col, passenger, destination }).expect("in range")
    };
    for r in 0..layout.height {
        for c in 0..layout.width {
            let here = layout.stations.iter().position(|&p| p == (r, c));
            for passenger in 0..=k {
                for destination in 0..k {
                    let s = code(r, c, passenger, destination);
                    for (a, d) in TAXI_MOVES.into_iter().enumerate() {
                        let outs: Vec<(usize, f64, f64)> = attempt(layout, r, c, d)
                            .into_iter()
                            .map(|((nr, nc), q)| (code(nr, nc, passenger, destination), q, rw.step))
                            .collect();
                        b.transition(s, a, &outs);
                    }
                    let pickup = match here {
                        Some(h) if passenger == h => (code(r, c, k, destination), rw.step),
                        _ => (s, rw.illegal),
                    };
                    b.transition(s, 4, &[(pickup.0, 1.0, pickup.1)]);
                    let dropoff = match here {
                        Some(h) if passenger == k && h == destination => (done, rw.step + rw.goal),
                        Some(h) if passenger == k => (code(r, c, h, destination), rw.step),
                        _ => (s, rw.illegal),
                    };
                    b.transition(s, 5, &[(dropoff.0, 1.0, dropoff.1)]);
                }
            }
        }
    }
    b.goal(done);
    finish(b, layout, spec, enc)
}
