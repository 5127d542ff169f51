//! Seeded experiment harness: configuration, runs, metrics, summaries,
//! SVG plots and the reach-avoid path-length experiment.
//!
//! Every output is a pure function of the config and seeds. Runs execute on
//! the rayon pool and are merged in config order, so the thread count never
//! changes a byte of output.

pub mod compare;
pub mod config;
pub mod grid;
pub mod metrics;
pub mod plot;
pub mod runner;

use std::path::PathBuf;

pub use compare::{compare_runs, oracle_eta, SummaryRow};
pub use config::{load_config, AlgoKind, AlgoSpec, EnvSpec, ExperimentConfig};
pub use grid::{custom_grid_experiment, GridAlgo, GridOptions, GridReport, GridSummary};
pub use metrics::{read_metrics, write_metrics, MetricRow};
pub use plot::{emit_plot, render_svg};
pub use runner::{run_experiment, ExperimentOutput, RunFailure, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] erpo_core::Error),
    #[error(transparent)]
    Env(#[from] erpo_envs::EnvError),
    #[error(transparent)]
    Baseline(#[from] erpo_baselines::BaselineError),
    #[error("{0}")]
    Run(String),
}

impl BenchError {
    /// Process exit code: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config { .. } | BenchError::Parse { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
