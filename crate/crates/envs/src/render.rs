//! ASCII rendering and the text map format.
//!
//! Glyphs: `.` floor, `S` start, `G` goal, `O` hole, `~` lava, `#` wall,
//! `%` soft wall, `C` cliff, `c` soft cliff, `R G Y B` taxi stations,
//! `A` agent (`> v < ^` when it has a heading).
//!
//! A text map is a header of `# key: value` lines (hash, space) followed by one glyph row
//! per grid row:
//!
//! ```text
//! # family: CW
//! # level: L1
//! # seed: 0
//! # beta: 0.15
//! # slip: 0.0
//! # soft: 0.15
//! # horizon: 2000
//! # goal_reward: 500.0
//! # dividers: 0,3,1.0; 1,3,1.0
//! S..C
//! ```
//!
//! `soft` is the blocking probability shared by every soft glyph.

use std::collections::BTreeMap;

use crate::encoder::DomainState;
use crate::family::{EnvInstance, Family, Level};
use crate::layout::{Cell, Dir, Divider, GridLayout};
use crate::EnvError;

const STATION_GLYPHS: [char; 4] = ['R', 'G', 'Y', 'B'];

fn cell_glyph(layout: &GridLayout, family: Family, r: usize, c: usize) -> char {
    if let Some(i) = layout.stations.iter().position(|&p| p == (r, c)) {
        return STATION_GLYPHS.get(i).copied().unwrap_or('*');
    }
    match layout.get(r, c) {
        Cell::Goal => 'G',
        Cell::Hole => 'O',
        Cell::Lava => '~',
        Cell::Wall { block } if block >= 1.0 => '#',
        Cell::Wall { .. } => '%',
        Cell::Cliff { chance } if chance >= 1.0 => 'C',
        Cell::Cliff { .. } => 'c',
        Cell::Floor if family != Family::Taxi && layout.starts.contains(&(r, c)) => 'S',
        Cell::Floor => '.',
    }
}

fn agent_glyph(dir: Option<Dir>) -> char {
    match dir {
        None => 'A',
        Some(Dir::East) => '>',
        Some(Dir::South) => 'v',
        Some(Dir::West) => '<',
        Some(Dir::North) => '^',
    }
}

fn grid_rows(env: &EnvInstance, agent: Option<(usize, usize, Option<Dir>)>) -> Vec<String> {
    let g = &env.layout;
    (0..g.height)
        .map(|r| {
            (0..g.width)
                .map(|c| match agent {
                    Some((ar, ac, dir)) if (ar, ac) == (r, c) => agent_glyph(dir),
                    _ => cell_glyph(g, env.family, r, c),
                })
                .collect()
        })
        .collect()
}

/// One glyph per cell with the agent drawn over its cell; rows joined by
/// newlines. States without a position (taxi done) draw no agent.
pub fn render_ascii(env: &EnvInstance, state: usize) -> String {
    let agent = match env.encoder.decode(state) {
        Some(DomainState::Cell { row, col }) | Some(DomainState::Taxi { row, col, .. }) => Some((row, col, None)),
        Some(DomainState::Oriented { row, col, dir }) => Some((row, col, Some(dir))),
        _ => None,
    };
    grid_rows(env, agent).join("\n")
}

fn soft_value(g: &GridLayout) -> Option<f64> {
    g.cells.iter().find_map(|c| match *c {
        Cell::Wall { block } if block < 1.0 => Some(block),
        Cell::Cliff { chance } if chance < 1.0 => Some(chance),
        _ => None,
    })
}

pub fn to_text_map(env: &EnvInstance) -> String {
    let g = &env.layout;
    let mut out = String::new();
    out.push_str(&format!("# family: {}\n", env.family));
    out.push_str(&format!("# level: {}\n", env.level));
    out.push_str(&format!("# seed: {}\n", env.seed));
    out.push_str(&format!("# beta: {:?}\n", env.beta));
    out.push_str(&format!("# slip: {:?}\n", g.slip));
    if let Some(p) = soft_value(g) {
        out.push_str(&format!("# soft: {p:?}\n"));
    }
    out.push_str(&format!("# horizon: {}\n", env.dynamics.horizon));
    out.push_str(&format!("# goal_reward: {:?}\n", env.dynamics.rewards.goal));
    if !g.dividers.is_empty() {
        let list: Vec<String> = g
            .dividers
            .iter()
            .map(|d| format!("{},{},{:?}", d.row, d.col, d.block))
            .collect();
        out.push_str(&format!("# dividers: {}\n", list.join("; ")));
    }
    for row in grid_rows(env, None) {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> EnvError {
    EnvError::Parse { line, msg: msg.into() }
}

/// Inverse of [`to_text_map`].
pub fn parse_text_map(text: &str) -> Result<EnvInstance, EnvError> {
    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(':').ok_or_else(|| parse_err(n, "header needs `key: value`"))?;
            header.insert(k.trim(), (n, v.trim()));
        } else if !line.trim().is_empty() {
            rows.push((n, line.trim_end()));
        }
    }
    fn field<T: std::str::FromStr>(h: &BTreeMap<&str, (usize, &str)>, key: &str) -> Result<Option<T>, EnvError> {
        match h.get(key) {
            None => Ok(None),
            Some(&(n, v)) => v.parse().map(Some).map_err(|_| parse_err(n, format!("bad {key} {v:?}"))),
        }
    }
    let family: Family = field(&header, "family")?.ok_or_else(|| parse_err(1, "missing family"))?;
    let level: Level = field(&header, "level")?.unwrap_or(Level::Base);
    let seed: u64 = field(&header, "seed")?.unwrap_or(0);
    let beta: f64 = field(&header, "beta")?.unwrap_or(0.0);
    let soft: f64 = field(&header, "soft")?.unwrap_or(1.0);
    let (first, _) = *rows.first().ok_or_else(|| parse_err(text.lines().count(), "no grid rows"))?;
    let width = rows[0].1.chars().count();
    let mut g = GridLayout::new(rows.len(), width);
    g.slip = field(&header, "slip")?.unwrap_or(0.0);
    let mut stations = [None; 4];
    for (r, &(n, line)) in rows.iter().enumerate() {
        if line.chars().count() != width {
            return Err(parse_err(n, format!("row has {} glyphs, expected {width}", line.chars().count())));
        }
        for (c, ch) in line.chars().enumerate() {
            let cell = match ch {
                '.' | 'A' | '>' | 'v' | '<' | '^' => Cell::Floor,
                'S' => {
                    g.starts.push((r, c));
                    Cell::Floor
                }
                'O' => Cell::Hole,
                '~' => Cell::Lava,
                '#' => Cell::HARD_WALL,
                '%' => Cell::Wall { block: soft },
                'C' => Cell::HARD_CLIFF,
                'c' => Cell::Cliff { chance: soft },
                'G' if family != Family::Taxi => Cell::Goal,
                'R' | 'G' | 'Y' | 'B' if family == Family::Taxi => {
                    let i = STATION_GLYPHS.iter().position(|&s| s == ch).expect("station glyph");
                    stations[i] = Some((r, c));
                    Cell::Floor
                }
                other => return Err(parse_err(n, format!("unknown glyph {other:?}"))),
            };
            g.set(r, c, cell);
        }
    }
    if family == Family::Taxi {
        g.stations = stations.iter().map_while(|s| *s).collect();
        g.starts = (0..g.height).flat_map(|r| (0..g.width).map(move |c| (r, c))).collect();
    }
    if let Some(&(n, list)) = header.get("dividers") {
        for item in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            let bad = || parse_err(n, format!("bad divider {item:?}"));
            if parts.len() != 3 {
                return Err(bad());
            }
            g.dividers.push(Divider {
                row: parts[0].parse().map_err(|_| bad())?,
                col: parts[1].parse().map_err(|_| bad())?,
                block: parts[2].parse().map_err(|_| bad())?,
            });
        }
    }
    if g.starts.is_empty() {
        return Err(parse_err(first, "no start cell"));
    }
    let mut dynamics = family.dynamics();
    if let Some(h) = field(&header, "horizon")? {
        dynamics.horizon = h;
    }
    if let Some(r) = field(&header, "goal_reward")? {
        dynamics.rewards.goal = r;
    }
    let mut env = EnvInstance::from_layout(family, level, seed, g, dynamics)?;
    env.beta = beta;
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_env, Family, Level};

    fn tiny() -> EnvInstance {
        let mut g = GridLayout::new(2, 2);
        g.starts.push((0, 0));
        g.set(1, 1, Cell::Goal);
        EnvInstance::from_layout(Family::CliffWalking, Level::Base, 0, g, Family::CliffWalking.dynamics()).unwrap()
    }

    #[test]
    fn two_by_two() {
        assert_eq!(render_ascii(&tiny(), 0), "A.\n.G");
        assert_eq!(render_ascii(&tiny(), 1), "SA\n.G");
    }

    #[test]
    fn hazard_glyphs() {
        let mut env = tiny();
        env.layout.set(0, 1, Cell::Hole);
        env.layout.set(1, 0, Cell::Lava);
        assert_eq!(render_ascii(&env, 3), "SO\n~A");
        env.layout.set(0, 1, Cell::HARD_WALL);
        assert_eq!(render_ascii(&env, 0), "A#\n~G");
    }

    #[test]
    fn oriented_agent_shows_heading() {
        let env = build_env(Family::DistShift, Level::Base, 0).unwrap();
        let s = env
            .encoder
            .encode(DomainState::Oriented { row: 1, col: 1, dir: Dir::South })
            .unwrap();
        let text = render_ascii(&env, s);
        assert_eq!(text.lines().nth(1).unwrap().chars().nth(1), Some('v'));
        assert_eq!(text, render_ascii(&env, s));
    }

    #[test]
    fn text_map_roundtrip() {
        for fam in Family::ALL {
            for level in [Level::Base, Level::L2, Level::L3] {
                let env = build_env(fam, level, 3).unwrap();
                let text = to_text_map(&env);
                let back = parse_text_map(&text).unwrap();
                assert_eq!(back.layout, env.layout, "{fam} {level}");
                assert_eq!(back.mdp, env.mdp, "{fam} {level}");
                assert_eq!(back.beta, env.beta);
                assert_eq!(to_text_map(&back), text);
            }
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_text_map("# family: FL\nS.\n.Q\n").unwrap_err();
        assert!(matches!(err, EnvError::Parse { line: 3, .. }), "{err}");
        let err = parse_text_map("# family: FL\nS.\n.\n").unwrap_err();
        assert!(matches!(err, EnvError::Parse { line: 3, .. }), "{err}");
    }
}
