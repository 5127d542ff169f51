//! Per-algorithm summaries of evaluation curves.

use std::collections::BTreeMap;
use std::path::Path;

use erpo_core::mdp::horizon_optimum;
use erpo_envs::{build_env, Family, Level};
use serde::{Deserialize, Serialize};

use crate::metrics::{group_runs, MetricRow};
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: String,
    pub env: String,
    pub level: String,
    pub runs: usize,
    pub oracle: f64,
    /// Return a run must reach to count as converged.
    pub threshold_return: f64,
    /// Median over the runs that reached the threshold.
    pub median_steps_to_threshold: Option<f64>,
    pub not_reached: usize,
    pub final_return_mean: f64,
    pub final_return_median: f64,
    pub auc_mean: f64,
    /// More than half of the runs reached the threshold.
    pub converged: bool,
}

/// `fraction` of the oracle, measured from the top for negative optima so
/// the target is always below the oracle.
pub fn threshold_return(oracle: f64, fraction: f64) -> f64 {
    if oracle >= 0.0 {
        fraction * oracle
    } else {
        oracle - (1.0 - fraction) * oracle.abs()
    }
}

/// Finite-horizon optimum of a canonical instance.
pub fn oracle_eta(family: Family, level: Level, instance_seed: u64) -> Result<f64> {
    Ok(horizon_optimum(&build_env(family, level, instance_seed)?.mdp).eta)
}

/// Area under a step curve: each evaluation holds from the previous
/// checkpoint (or step 0) up to its own.
pub fn auc(points: &[(u64, f64)]) -> f64 {
    let mut prev = 0;
    let mut total = 0.0;
    for &(s, r) in points {
        total += r * (s - prev) as f64;
        prev = s;
    }
    total
}

pub fn steps_to_threshold(points: &[(u64, f64)], threshold: f64) -> Option<u64> {
    points.iter().find(|&&(_, r)| r >= threshold).map(|&(s, _)| s)
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Summarizes every (algo, env, level) group. Groups without an oracle are
/// skipped. Output is sorted by env, level, then algorithm name.
pub fn compare_runs(rows: &[MetricRow], fraction: f64, oracle: impl Fn(&str, &str) -> Option<f64>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, String), Vec<Vec<(u64, f64)>>> = BTreeMap::new();
    for run in group_runs(rows) {
        let r0 = run[0];
        let mut pts: Vec<(u64, f64)> = run.iter().map(|r| (r.env_steps, r.mean_return)).collect();
        pts.sort_by_key(|p| p.0);
        groups
            .entry((r0.env.clone(), r0.level.clone(), r0.algo.clone()))
            .or_default()
            .push(pts);
    }
    let mut out = Vec::new();
    for ((env, level, algo), runs) in groups {
        let Some(oracle) = oracle(&env, &level) else {
            continue;
        };
        let thr = threshold_return(oracle, fraction);
        let mut reached: Vec<f64> = runs
            .iter()
            .filter_map(|p| steps_to_threshold(p, thr))
            .map(|s| s as f64)
            .collect();
        let mut finals: Vec<f64> = runs.iter().filter_map(|p| p.last().map(|x| x.1)).collect();
        let n = runs.len();
        out.push(SummaryRow {
            algo,
            env,
            level,
            runs: n,
            oracle,
            threshold_return: thr,
            not_reached: n - reached.len(),
            converged: 2 * reached.len() > n,
            median_steps_to_threshold: median(&mut reached),
            final_return_mean: finals.iter().sum::<f64>() / finals.len().max(1) as f64,
            final_return_median: median(&mut finals).unwrap_or(f64::NAN),
            auc_mean: runs.iter().map(|p| auc(p)).sum::<f64>() / n as f64,
        });
    }
    out
}

/// `compare_runs` with oracles computed from the canonical instances.
pub fn compare_canonical(rows: &[MetricRow], fraction: f64, instance_seed: u64) -> Result<Vec<SummaryRow>> {
    let mut oracles = BTreeMap::new();
    for r in rows {
        let key = (r.env.clone(), r.level.clone());
        if oracles.contains_key(&key) {
            continue;
        }
        let family: Family = r.env.parse()?;
        let level: Level = r.level.parse()?;
        oracles.insert(key, oracle_eta(family, level, instance_seed)?);
    }
    Ok(compare_runs(rows, fraction, |e, l| oracles.get(&(e.to_string(), l.to_string())).copied()))
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "algo",
            "env",
            "level",
            "runs",
            "oracle",
            "threshold_return",
            "median_steps_to_threshold",
            "not_reached",
            "final_return_mean",
            "final_return_median",
            "auc_mean",
            "converged",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Run(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    std::fs::write(path, summary_to_csv(rows)?).map_err(|e| BenchError::io(path, e))
}

/// Fixed-width table for the terminal.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<16} {:<5} {:<5} {:>4} {:>12} {:>14} {:>5} {:>12} {:>14}\n",
        "algo", "env", "level", "runs", "oracle", "steps_to_thr", "miss", "final", "auc"
    );
    for r in rows {
        let steps = r
            .median_steps_to_threshold
            .map_or_else(|| "-".to_string(), |x| format!("{x:.0}"));
        s.push_str(&format!(
            "{:<16} {:<5} {:<5} {:>4} {:>12.3} {:>14} {:>5} {:>12.3} {:>14.4e}\n",
            r.algo, r.env, r.level, r.runs, r.oracle, steps, r.not_reached, r.final_return_mean, r.auc_mean
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run: &str, algo: &str, steps: u64, ret: f64) -> MetricRow {
        MetricRow {
            run_id: run.into(),
            algo: algo.into(),
            env: "FL".into(),
            level: "L1".into(),
            seed: 0,
            env_steps: steps,
            mean_return: ret,
            eval_episodes: 20,
            wall_ms: 0,
        }
    }

    #[test]
    fn single_run_reaching_threshold() {
        let rows: Vec<MetricRow> = (1..=10).map(|k| row("a", "erpo", k * 1000, if k >= 5 { 95.0 } else { 10.0 })).collect();
        let s = compare_runs(&rows, 0.9, |_, _| Some(100.0));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].median_steps_to_threshold, Some(5000.0));
        assert_eq!(s[0].not_reached, 0);
        assert!(s[0].converged);
        assert_eq!(s[0].final_return_mean, 95.0);
    }

    #[test]
    fn unreached_runs_are_counted_not_averaged() {
        let mut rows = Vec::new();
        for (id, hit) in [("a", Some(3)), ("b", None), ("c", Some(7))] {
            for k in 1..=10u64 {
                let ok = hit.is_some_and(|h| k >= h);
                rows.push(row(id, "q", k * 10, if ok { 1.0 } else { 0.0 }));
            }
        }
        let s = &compare_runs(&rows, 0.9, |_, _| Some(1.0))[0];
        assert_eq!(s.not_reached, 1);
        assert_eq!(s.median_steps_to_threshold, Some(50.0));
        assert!(s.converged);
    }

    #[test]
    fn constant_curve_auc() {
        let budget = 10_000;
        let rows: Vec<MetricRow> = (1..=10).map(|k| row("a", "erpo", k * 1000, 2.5)).collect();
        let s = &compare_runs(&rows, 0.9, |_, _| Some(3.0))[0];
        assert_eq!(s.auc_mean, 2.5 * budget as f64);
        assert_eq!(s.median_steps_to_threshold, None);
        assert!(!s.converged);
    }

    #[test]
    fn empty_input_empty_table() {
        assert!(compare_runs(&[], 0.9, |_, _| Some(1.0)).is_empty());
        assert_eq!(summary_to_csv(&[]).unwrap().lines().count(), 1);
    }

    #[test]
    fn negative_oracle_threshold() {
        assert_eq!(threshold_return(100.0, 0.9), 90.0);
        assert_eq!(threshold_return(-100.0, 0.9), -110.0);
    }
}
