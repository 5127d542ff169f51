//! Deterministic movement graph for heuristic search.
//!
//! Each action follows its nominal outcome: no slip, soft blockers passed,
//! cliffs with a return chance below one crossed. Moves into holes, lava, and
//! hard cliffs are dropped. Every edge costs one step.

use crate::dynamics::{MoveModel, TAXI_MOVES};
use crate::encoder::{DomainState, Encoder};
use crate::family::EnvInstance;
use crate::layout::{manhattan, Cell, Dir, GridLayout};

#[derive(Debug, Clone)]
pub struct MovementGraph {
    encoder: Encoder,
    stations: Vec<(usize, usize)>,
    /// `(action, next)` per state, sorted by next then action.
    edges: Vec<Vec<(usize, usize)>>,
    terminal: Vec<bool>,
}

fn nominal(g: &GridLayout, r: usize, c: usize, d: Dir) -> Option<(usize, usize)> {
    let (nr, nc) = g.passable(r, c, d).unwrap_or((r, c));
    let cell = g.get(nr, nc);
    if cell.is_hazard() || cell == Cell::HARD_CLIFF {
        return None;
    }
    Some((nr, nc))
}

impl MovementGraph {
    pub fn new(env: &EnvInstance) -> Self {
        let g = &env.layout;
        let enc = env.encoder;
        let n = enc.num_states();
        let mut edges = vec![Vec::new(); n];
        let mut terminal = vec![false; n];
        for (s, out) in edges.iter_mut().enumerate() {
            if env.mdp.is_absorbing(s) {
                terminal[s] = true;
                continue;
            }
            let Some(state) = enc.decode(s) else { continue };
            match (env.dynamics.moves, state) {
                (MoveModel::Slippery | MoveModel::Deterministic, DomainState::Cell { row, col }) => {
                    for (a, d) in Dir::ALL.into_iter().enumerate() {
                        if let Some((nr, nc)) = nominal(g, row, col, d) {
                            out.push((a, g.index(nr, nc)));
                        }
                    }
                }
                (MoveModel::Oriented, DomainState::Oriented { row, col, dir }) => {
                    let code = |row, col, dir| enc.encode(DomainState::Oriented { row, col, dir }).expect("in grid");
                    out.push((0, code(row, col, dir.left())));
                    out.push((1, code(row, col, dir.right())));
                    if let Some((nr, nc)) = nominal(g, row, col, dir) {
                        out.push((2, code(nr, nc, dir)));
                    }
                }
                (MoveModel::Taxi, DomainState::Taxi { row, col, passenger, destination }) => {
                    let k = g.stations.len();
                    let code = |row, col, passenger| {
                        enc.encode(DomainState::Taxi { row, col, passenger, destination }).expect("in grid")
                    };
                    for (a, d) in TAXI_MOVES.into_iter().enumerate() {
                        if let Some((nr, nc)) = nominal(g, row, col, d) {
                            out.push((a, code(nr, nc, passenger)));
                        }
                    }
                    let here = g.stations.iter().position(|&p| p == (row, col));
                    match here {
                        Some(h) if passenger == h => out.push((4, code(row, col, k))),
                        Some(h) if passenger == k && h == destination => out.push((5, n - 1)),
                        Some(h) if passenger == k => out.push((5, code(row, col, h))),
                        _ => {}
                    }
                }
                _ => {}
            }
            out.retain(|&(_, next)| next != s);
            out.sort_by_key(|&(a, next)| (next, a));
            out.dedup_by_key(|e| e.1);
        }
        Self {
            encoder: enc,
            stations: g.stations.clone(),
            edges,
            terminal,
        }
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    /// `(action, next)` pairs leaving `s`, self-loops removed.
    pub fn successors(&self, s: usize) -> &[(usize, usize)] {
        &self.edges[s]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    /// Lower bound on the steps from `s` to `goal`.
    pub fn heuristic(&self, s: usize, goal: usize) -> f64 {
        let (Some(a), Some(b)) = (self.encoder.decode(s), self.encoder.decode(goal)) else {
            return 0.0;
        };
        match (a, b) {
            (DomainState::Taxi { row, col, passenger, destination }, DomainState::Done) => {
                let k = self.stations.len();
                let dest = self.stations[destination];
                if passenger == k {
                    (manhattan((row, col), dest) + 1) as f64
                } else {
                    let p = self.stations[passenger];
                    (manhattan((row, col), p) + 1 + manhattan(p, dest) + 1) as f64
                }
            }
            _ => match (self.encoder.position(s), self.encoder.position(goal)) {
                (Some(p), Some(q)) => manhattan(p, q) as f64,
                _ => 0.0,
            },
        }
    }

    /// Action taking `s` to `next`, if there is an edge.
    pub fn action_between(&self, s: usize, next: usize) -> Option<usize> {
        self.edges[s].iter().find(|e| e.1 == next).map(|e| e.0)
    }
}
