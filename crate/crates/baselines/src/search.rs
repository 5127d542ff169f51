//! A*, IDA*, and breadth-first search on an environment's movement graph.
//!
//! All three use unit step costs. A* and IDA* share the graph's admissible
//! heuristic. Ties go to the lowest state index.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use erpo_envs::{EnvInstance, MovementGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// State indices from start to goal; empty when not found.
    pub path: Vec<usize>,
    pub cost: f64,
    pub expanded: usize,
    pub found: bool,
}

impl SearchResult {
    fn not_found(expanded: usize) -> Self {
        Self {
            path: Vec::new(),
            cost: f64::INFINITY,
            expanded,
            found: false,
        }
    }

    fn from_path(path: Vec<usize>, expanded: usize) -> Self {
        Self {
            cost: path.len().saturating_sub(1) as f64,
            path,
            expanded,
            found: true,
        }
    }

    pub fn to_json(&self) -> String {
        // Infinite cost has no JSON number; unsolved results carry null.
        let cost = if self.found { Some(self.cost) } else { None };
        serde_json::json!({
            "path": self.path,
            "cost": cost,
            "expanded": self.expanded,
            "found": self.found,
        })
        .to_string()
    }
}

fn unwind(parent: &[usize], goal: usize) -> Vec<usize> {
    let mut path = vec![goal];
    let mut s = goal;
    while parent[s] != usize::MAX {
        s = parent[s];
        path.push(s);
    }
    path.reverse();
    path
}

fn h(graph: &MovementGraph, s: usize, goal: usize) -> u64 {
    graph.heuristic(s, goal) as u64
}

pub fn astar_graph(graph: &MovementGraph, start: usize, goal: usize) -> SearchResult {
    let n = graph.num_states();
    let mut g = vec![u64::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut expanded = 0;
    g[start] = 0;
    open.push(Reverse((h(graph, start, goal), start)));
    while let Some(Reverse((_, s))) = open.pop() {
        if closed[s] {
            continue;
        }
        closed[s] = true;
        expanded += 1;
        if s == goal {
            return SearchResult::from_path(unwind(&parent, goal), expanded);
        }
        for &(_, next) in graph.successors(s) {
            let ng = g[s] + 1;
            if ng < g[next] {
                g[next] = ng;
                parent[next] = s;
                closed[next] = false;
                open.push(Reverse((ng + h(graph, next, goal), next)));
            }
        }
    }
    SearchResult::not_found(expanded)
}

pub fn astar(env: &EnvInstance, start: usize, goal: usize) -> SearchResult {
    astar_graph(&MovementGraph::new(env), start, goal)
}

struct Ida<'a> {
    graph: &'a MovementGraph,
    goal: usize,
    path: Vec<usize>,
    on_path: Vec<bool>,
    /// Cheapest `g` at which each state was entered in this iteration.
    best_g: Vec<u64>,
    expanded: usize,
}

enum Probe {
    Found,
    Next(u64),
}

impl Ida<'_> {
    fn dfs(&mut self, s: usize, g: u64, bound: u64) -> Probe {
        let f = g + h(self.graph, s, self.goal);
        if f > bound {
            return Probe::Next(f);
        }
        if s == self.goal {
            return Probe::Found;
        }
        self.expanded += 1;
        let mut kids: Vec<(u64, usize)> = self
            .graph
            .successors(s)
            .iter()
            .map(|&(_, n)| (g + 1 + h(self.graph, n, self.goal), n))
            .collect();
        kids.sort_unstable();
        let mut next_bound = u64::MAX;
        for (_, n) in kids {
            if self.on_path[n] || self.best_g[n] <= g + 1 {
                continue;
            }
            self.best_g[n] = g + 1;
            self.path.push(n);
            self.on_path[n] = true;
            match self.dfs(n, g + 1, bound) {
                Probe::Found => return Probe::Found,
                Probe::Next(b) => next_bound = next_bound.min(b),
            }
            self.on_path[n] = false;
            self.path.pop();
        }
        Probe::Next(next_bound)
    }
}

pub fn idastar_graph(graph: &MovementGraph, start: usize, goal: usize) -> SearchResult {
    let n = graph.num_states();
    let mut ida = Ida {
        graph,
        goal,
        path: vec![start],
        on_path: vec![false; n],
        best_g: vec![u64::MAX; n],
        expanded: 0,
    };
    ida.on_path[start] = true;
    let mut bound = h(graph, start, goal);
    loop {
        ida.best_g.iter_mut().for_each(|g| *g = u64::MAX);
        ida.best_g[start] = 0;
        match ida.dfs(start, 0, bound) {
            Probe::Found => {
                let path = std::mem::take(&mut ida.path);
                return SearchResult::from_path(path, ida.expanded);
            }
            Probe::Next(u64::MAX) => return SearchResult::not_found(ida.expanded),
            Probe::Next(b) => bound = b,
        }
    }
}

pub fn idastar(env: &EnvInstance, start: usize, goal: usize) -> SearchResult {
    idastar_graph(&MovementGraph::new(env), start, goal)
}

pub fn bfs_graph(graph: &MovementGraph, start: usize, goal: usize) -> SearchResult {
    let n = graph.num_states();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut expanded = 0;
    while let Some(s) = queue.pop_front() {
        expanded += 1;
        if s == goal {
            return SearchResult::from_path(unwind(&parent, goal), expanded);
        }
        for &(_, next) in graph.successors(s) {
            if !seen[next] {
                seen[next] = true;
                parent[next] = s;
                queue.push_back(next);
            }
        }
    }
    SearchResult::not_found(expanded)
}

pub fn bfs(env: &EnvInstance, start: usize, goal: usize) -> SearchResult {
    bfs_graph(&MovementGraph::new(env), start, goal)
}

/// Exact step counts from every state to `goal` (`None` if it cannot be
/// reached).
pub fn distances_to(graph: &MovementGraph, goal: usize) -> Vec<Option<u64>> {
    let n = graph.num_states();
    let mut preds = vec![Vec::new(); n];
    for s in 0..n {
        for &(_, next) in graph.successors(s) {
            preds[next].push(s);
        }
    }
    let mut dist = vec![None; n];
    dist[goal] = Some(0);
    let mut queue = VecDeque::from([goal]);
    while let Some(s) = queue.pop_front() {
        let d = dist[s].expect("queued states have distances");
        for &p in &preds[s] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Episode return of following `result.path` under the environment's reward
/// structure, taking each step's nominal outcome. `None` if the path uses a
/// move the graph does not have.
pub fn path_return(env: &EnvInstance, result: &SearchResult) -> Option<f64> {
    let graph = MovementGraph::new(env);
    let mdp = &env.mdp;
    let mut total = 0.0;
    let mut disc = 1.0;
    for (t, w) in result.path.windows(2).enumerate() {
        let a = graph.action_between(w[0], w[1])?;
        let r = mdp.realized_reward(w[0], w[1], mdp.reward(w[0], a, w[1]), t);
        total += disc * r;
        disc *= mdp.discount();
    }
    Some(total)
}
