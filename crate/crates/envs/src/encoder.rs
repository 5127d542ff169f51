use serde::{Deserialize, Serialize};

use crate::layout::Dir;

/// Domain-level description of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainState {
    Cell { row: usize, col: usize },
    Oriented { row: usize, col: usize, dir: Dir },
    /// `passenger` is a station index, or `stations` when riding in the taxi.
    Taxi { row: usize, col: usize, passenger: usize, destination: usize },
    /// Passenger delivered.
    Done,
}

/// Bijection between domain states and MDP state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoder {
    /// One state per cell.
    Grid { height: usize, width: usize },
    /// One state per cell and heading; headings ordered E, S, W, N.
    Oriented { height: usize, width: usize },
    /// Position × passenger location × destination, then one done state.
    Taxi { height: usize, width: usize, stations: usize },
}

/// Heading order of the oriented encoding.
pub const HEADINGS: [Dir; 4] = [Dir::East, Dir::South, Dir::West, Dir::North];

pub fn heading_index(d: Dir) -> usize {
    HEADINGS.iter().position(|&h| h == d).expect("all directions are headings")
}

impl Encoder {
    pub fn num_states(&self) -> usize {
        match *self {
            Encoder::Grid { height, width } => height * width,
            Encoder::Oriented { height, width } => height * width * 4,
            Encoder::Taxi { height, width, stations } => height * width * (stations + 1) * stations + 1,
        }
    }

    pub fn encode(&self, s: DomainState) -> Option<usize> {
        match (*self, s) {
            (Encoder::Grid { height, width }, DomainState::Cell { row, col }) => {
                (row < height && col < width).then(|| row * width + col)
            }
            (Encoder::Oriented { height, width }, DomainState::Oriented { row, col, dir }) => {
                (row < height && col < width).then(|| (row * width + col) * 4 + heading_index(dir))
            }
            (
                Encoder::Taxi { height, width, stations },
                DomainState::Taxi { row, col, passenger, destination },
            ) => (row < height && col < width && passenger <= stations && destination < stations)
                .then(|| ((row * width + col) * (stations + 1) + passenger) * stations + destination),
            (Encoder::Taxi { .. }, DomainState::Done) => Some(self.num_states() - 1),
            _ => None,
        }
    }

    pub fn decode(&self, i: usize) -> Option<DomainState> {
        if i >= self.num_states() {
            return None;
        }
        Some(match *self {
            Encoder::Grid { width, .. } => DomainState::Cell { row: i / width, col: i % width },
            Encoder::Oriented { width, .. } => {
                let cell = i / 4;
                DomainState::Oriented {
                    row: cell / width,
                    col: cell % width,
                    dir: HEADINGS[i % 4],
                }
            }
            Encoder::Taxi { width, stations, .. } => {
                if i + 1 == self.num_states() {
                    return Some(DomainState::Done);
                }
                let destination = i % stations;
                let rest = i / stations;
                let passenger = rest % (stations + 1);
                let cell = rest / (stations + 1);
                DomainState::Taxi {
                    row: cell / width,
                    col: cell % width,
                    passenger,
                    destination,
                }
            }
        })
    }

    /// Grid position of a state, if it has one.
    pub fn position(&self, i: usize) -> Option<(usize, usize)> {
        match self.decode(i)? {
            DomainState::Cell { row, col }
            | DomainState::Oriented { row, col, .. }
            | DomainState::Taxi { row, col, .. } => Some((row, col)),
            DomainState::Done => None,
        }
    }
}
