use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Cell contents. Blocking walls and cliffs carry the probability that they
/// act; `1.0` is the ordinary hard version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Floor,
    Goal,
    /// Terminal, zero reward.
    Hole,
    /// Terminal, zero reward.
    Lava,
    /// Entering fails with probability `block`.
    Wall { block: f64 },
    /// Entering sends the agent back to the start with probability `chance`.
    Cliff { chance: f64 },
}

impl Cell {
    pub const HARD_WALL: Cell = Cell::Wall { block: 1.0 };
    pub const HARD_CLIFF: Cell = Cell::Cliff { chance: 1.0 };

    pub fn is_terminal(self) -> bool {
        matches!(self, Cell::Goal | Cell::Hole | Cell::Lava)
    }

    pub fn is_hazard(self) -> bool {
        matches!(self, Cell::Hole | Cell::Lava)
    }

    pub fn is_hard_wall(self) -> bool {
        matches!(self, Cell::Wall { block } if block >= 1.0)
    }

    pub fn is_floor(self) -> bool {
        matches!(self, Cell::Floor)
    }
}

/// Compass moves in action order for the four-way families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Dir::North => (-1, 0),
            Dir::East => (0, 1),
            Dir::South => (1, 0),
            Dir::West => (0, -1),
        }
    }

    pub fn left(self) -> Dir {
        match self {
            Dir::North => Dir::West,
            Dir::East => Dir::North,
            Dir::South => Dir::East,
            Dir::West => Dir::South,
        }
    }

    pub fn right(self) -> Dir {
        match self {
            Dir::North => Dir::East,
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
        }
    }
}

/// A blocking edge between `(row, col)` and `(row, col + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divider {
    pub row: usize,
    pub col: usize,
    pub block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub height: usize,
    pub width: usize,
    /// Row-major.
    pub cells: Vec<Cell>,
    pub starts: Vec<(usize, usize)>,
    /// Taxi pickup/dropoff locations.
    pub stations: Vec<(usize, usize)>,
    pub dividers: Vec<Divider>,
    /// Four-way families: probability of each perpendicular slip.
    /// Oriented families: probability that a forward move fails.
    pub slip: f64,
}

impl GridLayout {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            cells: vec![Cell::Floor; height * width],
            starts: Vec::new(),
            stations: Vec::new(),
            dividers: Vec::new(),
            slip: 0.0,
        }
    }

    /// Floor grid surrounded by a ring of hard walls.
    pub fn walled(height: usize, width: usize) -> Self {
        let mut g = Self::new(height, width);
        for r in 0..height {
            for c in 0..width {
                if r == 0 || c == 0 || r + 1 == height || c + 1 == width {
                    g.set(r, c, Cell::HARD_WALL);
                }
            }
        }
        g
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.width + c
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.width, i % self.width)
    }

    pub fn get(&self, r: usize, c: usize) -> Cell {
        self.cells[r * self.width + c]
    }

    pub fn set(&mut self, r: usize, c: usize, cell: Cell) {
        let i = self.index(r, c);
        self.cells[i] = cell;
    }

    pub fn goals(&self) -> Vec<(usize, usize)> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] == Cell::Goal)
            .map(|i| self.coords(i))
            .collect()
    }

    /// Neighbour in direction `d`, if inside the grid.
    pub fn step(&self, r: usize, c: usize, d: Dir) -> Option<(usize, usize)> {
        let (dr, dc) = d.delta();
        let nr = r.checked_add_signed(dr)?;
        let nc = c.checked_add_signed(dc)?;
        (nr < self.height && nc < self.width).then_some((nr, nc))
    }

    /// Blocking probability of the edge crossed by moving `d` from `(r, c)`.
    pub fn divider_block(&self, r: usize, c: usize, d: Dir) -> f64 {
        let col = match d {
            Dir::East => c,
            Dir::West if c > 0 => c - 1,
            _ => return 0.0,
        };
        self.dividers
            .iter()
            .filter(|dv| dv.row == r && dv.col == col)
            .map(|dv| dv.block)
            .fold(0.0, f64::max)
    }

    pub fn has_divider(&self, r: usize, col: usize) -> bool {
        self.dividers.iter().any(|d| d.row == r && d.col == col)
    }

    /// Whether the move is possible at all: inside the grid, not into a hard
    /// wall, not across a hard divider.
    pub fn passable(&self, r: usize, c: usize, d: Dir) -> Option<(usize, usize)> {
        let (nr, nc) = self.step(r, c, d)?;
        if self.get(nr, nc).is_hard_wall() || self.divider_block(r, c, d) >= 1.0 {
            return None;
        }
        Some((nr, nc))
    }

    /// Cells reachable from `from` without entering terminal cells other
    /// than goals, hard walls, or hard cliffs. Soft blockers count as open.
    pub fn reachable_from(&self, from: (usize, usize)) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([from]);
        seen[self.index(from.0, from.1)] = true;
        while let Some((r, c)) = queue.pop_front() {
            if self.get(r, c) == Cell::Goal {
                continue;
            }
            for d in Dir::ALL {
                let Some((nr, nc)) = self.passable(r, c, d) else { continue };
                let cell = self.get(nr, nc);
                if cell.is_hazard() || cell == Cell::HARD_CLIFF {
                    continue;
                }
                let i = self.index(nr, nc);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
        seen
    }

    /// Every start can reach some goal (or, without goals, every station).
    pub fn is_connected(&self) -> bool {
        let goals = self.goals();
        self.starts.iter().all(|&s| {
            let seen = self.reachable_from(s);
            if goals.is_empty() {
                self.stations.iter().all(|&(r, c)| seen[self.index(r, c)])
            } else {
                goals.iter().any(|&(r, c)| seen[self.index(r, c)])
            }
        })
    }

    pub fn count(&self, pred: impl Fn(Cell) -> bool) -> usize {
        self.cells.iter().filter(|&&c| pred(c)).count()
    }
}

pub fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}
