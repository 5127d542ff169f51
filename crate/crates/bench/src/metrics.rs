//! The evaluation-curve CSV shared by `run`, `compare` and `plot`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const METRICS_HEADER: &str = "run_id,algo,env,level,seed,env_steps,mean_return,eval_episodes,wall_ms";

/// One frozen-policy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run_id: String,
    pub algo: String,
    pub env: String,
    pub level: String,
    pub seed: u64,
    pub env_steps: u64,
    pub mean_return: f64,
    pub eval_episodes: usize,
    pub wall_ms: u64,
}

pub fn metrics_to_csv(rows: &[MetricRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| BenchError::Run(e.to_string()))?;
    let mut out = String::with_capacity(body.len() + METRICS_HEADER.len() + 1);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    std::fs::write(path, metrics_to_csv(rows)?).map_err(|e| BenchError::io(path, e))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != METRICS_HEADER {
        return Err(BenchError::Parse {
            line: 1,
            msg: format!("expected header `{METRICS_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec.map_err(|e: csv::Error| BenchError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?);
    }
    Ok(rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_metrics(&text)
}

/// Rows grouped by run id, in first-appearance order.
pub fn group_runs(rows: &[MetricRow]) -> Vec<Vec<&MetricRow>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: std::collections::HashMap<&str, Vec<&MetricRow>> = Default::default();
    for r in rows {
        groups
            .entry(r.run_id.as_str())
            .or_insert_with(|| {
                order.push(r.run_id.as_str());
                Vec::new()
            })
            .push(r);
    }
    order.into_iter().map(|id| groups.remove(id).expect("grouped")).collect()
}
