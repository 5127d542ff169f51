//! JSON document for [`TabularMdp`].
//!
//! ```json
//! {
//!   "num_states": 2, "num_actions": 1,
//!   "transitions": [[[0.0, 1.0]], [[0.0, 1.0]]],
//!   "rewards": [[0, 0, 1, 1.0]],
//!   "goals": [1], "start_dist": [1.0, 0.0],
//!   "horizon": 100, "discount": 1.0, "goal_time_penalty": 0.0
//! }
//! ```
//!
//! `transitions[s][a][s']` is the dense next-state distribution; rewards are
//! a sparse list of `[s, a, s', r]` (missing entries are zero). Probabilities
//! are written with 17 significant digits. `goal_time_penalty` is optional.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{Outcome, TabularMdp};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDocument {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<(usize, usize, usize, f64)>,
    goals: Vec<usize>,
    start_dist: Vec<f64>,
    horizon: usize,
    discount: f64,
    #[serde(default)]
    goal_time_penalty: f64,
}

fn prob17(x: f64) -> String {
    if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn real(x: f64) -> String {
    // `{:?}` is the shortest representation that round-trips.
    format!("{x:?}")
}

fn list<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = xs.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

impl TabularMdp {
    pub fn to_json(&self) -> String {
        let (n, m) = (self.num_states, self.num_actions);
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"num_states\": {n},");
        let _ = writeln!(out, "  \"num_actions\": {m},");
        out.push_str("  \"transitions\": [\n");
        for s in 0..n {
            let rows: Vec<String> = (0..m).map(|a| list(&self.dense_row(s, a), |&p| prob17(p))).collect();
            let sep = if s + 1 < n { "," } else { "" };
            let _ = writeln!(out, "    [{}]{sep}", rows.join(", "));
        }
        out.push_str("  ],\n");
        let mut rewards = Vec::new();
        for s in 0..n {
            for a in 0..m {
                for o in self.outcomes(s, a) {
                    if o.reward != 0.0 {
                        rewards.push(format!("[{s}, {a}, {}, {}]", o.next, real(o.reward)));
                    }
                }
            }
        }
        let _ = writeln!(out, "  \"rewards\": [{}],", rewards.join(", "));
        let _ = writeln!(out, "  \"goals\": {},", list(&self.goals, |g| g.to_string()));
        let _ = writeln!(out, "  \"start_dist\": {},", list(&self.start_dist, |&p| prob17(p)));
        let _ = writeln!(out, "  \"horizon\": {},", self.horizon);
        let _ = writeln!(out, "  \"discount\": {},", real(self.discount));
        let _ = writeln!(out, "  \"goal_time_penalty\": {}", real(self.goal_time_penalty));
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MdpDocument = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        let (n, m) = (doc.num_states, doc.num_actions);
        if doc.transitions.len() != n {
            return Err(Error::Dimension(format!("{} transition blocks for {n} states", doc.transitions.len())));
        }
        let mut rows: Vec<Vec<Outcome>> = Vec::with_capacity(n * m);
        for (s, block) in doc.transitions.iter().enumerate() {
            if block.len() != m {
                return Err(Error::Dimension(format!("state {s} has {} action rows", block.len())));
            }
            for dense in block {
                if dense.len() != n {
                    return Err(Error::Dimension(format!("row of length {} for {n} states", dense.len())));
                }
                rows.push(
                    dense
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(next, &prob)| Outcome { next, prob, reward: 0.0 })
                        .collect(),
                );
            }
        }
        for &(s, a, next, r) in &doc.rewards {
            if s >= n || a >= m || next >= n {
                return Err(Error::Index {
                    what: "reward entry",
                    index: s.max(a).max(next),
                    limit: n,
                });
            }
            match rows[s * m + a].iter_mut().find(|o| o.next == next) {
                Some(o) => o.reward = r,
                None if r == 0.0 => {}
                None => {
                    return Err(Error::Model(format!(
                        "reward on impossible transition ({s}, {a}, {next})"
                    )))
                }
            }
        }
        TabularMdp::new(n, m, rows, doc.goals, doc.start_dist, doc.horizon, doc.discount)?
            .with_goal_time_penalty(doc.goal_time_penalty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::testutil::random_mdp;

    #[test]
    fn roundtrip_is_exact() {
        for seed in 0..5 {
            let m = random_mdp(seed, 7, 3, 0.9, false).with_goal_time_penalty(0.5).unwrap();
            let text = m.to_json();
            let back = TabularMdp::from_json(&text).unwrap();
            assert_eq!(m, back);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn probabilities_have_seventeen_digits() {
        let m = random_mdp(3, 4, 2, 0.9, false);
        let text = m.to_json();
        assert!(text.contains("1.0000000000000000e0"));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(TabularMdp::from_json("{}").is_err());
        let bad_row = r#"{"num_states": 2, "num_actions": 1,
            "transitions": [[[0.5, 0.4]], [[0.0, 1.0]]], "rewards": [],
            "goals": [1], "start_dist": [1.0, 0.0], "horizon": 5, "discount": 1.0}"#;
        assert!(matches!(TabularMdp::from_json(bad_row), Err(Error::Distribution(_))));
        let impossible = r#"{"num_states": 2, "num_actions": 1,
            "transitions": [[[0.0, 1.0]], [[0.0, 1.0]]], "rewards": [[0, 0, 0, 3.0]],
            "goals": [1], "start_dist": [1.0, 0.0], "horizon": 5, "discount": 1.0}"#;
        assert!(TabularMdp::from_json(impossible).is_err());
    }

    #[test]
    fn minimal_document_parses() {
        let doc = r#"{"num_states": 2, "num_actions": 1,
            "transitions": [[[0.0, 1.0]], [[0.0, 1.0]]], "rewards": [[0, 0, 1, 1.0]],
            "goals": [1], "start_dist": [1.0, 0.0], "horizon": 5, "discount": 1.0}"#;
        let m = TabularMdp::from_json(doc).unwrap();
        assert_eq!(m.reward(0, 0, 1), 1.0);
        assert_eq!(m.goal_time_penalty(), 0.0);
    }
}
