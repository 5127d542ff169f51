use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use erpo_bench::compare::{compare_canonical, format_table, write_summary};
use erpo_bench::grid::{custom_grid_experiment, GridOptions};
use erpo_bench::metrics::read_metrics;
use erpo_bench::runner::write_outputs;
use erpo_bench::{emit_plot, load_config, run_experiment, BenchError, MetricRow};

#[derive(Parser)]
#[command(name = "erpo", version, about = "Seeded distribution-shift experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every job of a TOML or JSON config.
    Run { config: PathBuf },
    /// Summarize one or more metrics.csv files.
    Compare {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        /// Placement seed of the evaluated instances, for the oracle.
        #[arg(long, default_value_t = 0)]
        instance_seed: u64,
        /// Also write the table as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw learning curves as SVG.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Path lengths on reach-avoid grids with new obstacles.
    Grid {
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long, default_value_t = 0.2)]
        obstacles: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        rollouts: usize,
        /// Write the report as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<MetricRow>, BenchError> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_metrics(p)?);
    }
    Ok(rows)
}

fn execute(cmd: Cmd) -> Result<(), BenchError> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = load_config(&config)?;
            let out = run_experiment(&cfg)?;
            let dir = cfg.resolved_output_dir();
            write_outputs(&cfg, &out, &dir)?;
            println!("{} runs, {} rows -> {}", out.runs.len(), out.rows().len(), dir.display());
            for f in &out.failures {
                eprintln!("run {} failed: {}", f.run_id, f.error);
            }
            if !out.failures.is_empty() {
                return Err(BenchError::Run(format!("{} runs failed", out.failures.len())));
            }
        }
        Cmd::Compare {
            metrics,
            threshold,
            instance_seed,
            output,
        } => {
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(BenchError::Config {
                    field: "threshold",
                    reason: format!("{threshold} outside (0, 1]"),
                });
            }
            let rows = read_all(&metrics)?;
            let summary = compare_canonical(&rows, threshold, instance_seed)?;
            print!("{}", format_table(&summary));
            if let Some(path) = output {
                write_summary(&path, &summary)?;
            }
        }
        Cmd::Plot { metrics, output } => {
            emit_plot(&read_all(&metrics)?, &output)?;
        }
        Cmd::Grid {
            size,
            obstacles,
            seeds,
            rollouts,
            output,
        } => {
            let opts = GridOptions {
                rollouts_per_start: rollouts,
                ..Default::default()
            };
            let report = custom_grid_experiment(size, obstacles, &seeds, &opts)?;
            print!("{}", report.to_csv()?);
            if let Some(path) = output {
                let json = serde_json::to_string_pretty(&report).map_err(|e| BenchError::Run(e.to_string()))?;
                std::fs::write(&path, json).map_err(|e| BenchError::Io { path, source: e })?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
