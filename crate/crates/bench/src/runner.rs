//! Runs every (level, algorithm, seed) job of a config.
//!
//! Evaluation checkpoints sit at `k · cadence` environment steps for
//! `k = 1..=budget / cadence`. Training advances in units (an ERPO batch or
//! one baseline episode); a checkpoint crossed inside a unit is scored with
//! the policy from before that unit, one hit exactly with the policy after
//! it. Once a learner stops (ERPO convergence) its final policy fills the
//! remaining checkpoints, so every run has exactly `budget / cadence` rows.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use erpo_baselines::{make_learner, mean_return, episode_rng, Algo, ShiftSampler, WarmStart};
use erpo_core::erpo::{ErpoTrainer, IterRecord, TrainHistory};
use erpo_core::mdp::{horizon_optimum, HorizonSolution};
use erpo_core::StochasticPolicy;
use erpo_envs::{base_env, build_env, EnvInstance, Level};
use rayon::prelude::*;
use serde::Serialize;

use crate::compare::{compare_runs, summary_to_csv};
use crate::config::{AlgoKind, AlgoSpec, ExperimentConfig};
use crate::metrics::{metrics_to_csv, MetricRow};
use crate::{BenchError, Result};

/// Placement-seed pool for domain randomization.
pub const DR_POOL: u64 = 8;

/// Everything one level's jobs share.
#[derive(Debug)]
pub struct LevelContext {
    pub level: Level,
    pub base: EnvInstance,
    pub env: EnvInstance,
    pub base_solution: HorizonSolution,
    pub pi_star: StochasticPolicy,
    /// Finite-horizon optimum of the shifted instance.
    pub oracle: f64,
}

impl LevelContext {
    pub fn new(cfg: &ExperimentConfig, level: Level) -> Result<Self> {
        let base = base_env(cfg.env.family)?;
        let env = build_env(cfg.env.family, level, cfg.env.instance_seed)?;
        let base_solution = horizon_optimum(&base.mdp);
        let pi_star = base_solution.policy();
        let oracle = horizon_optimum(&env.mdp).eta;
        Ok(Self {
            level,
            base,
            env,
            base_solution,
            pi_star,
            oracle,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: String,
    pub algo: String,
    pub level: Level,
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    pub history: TrainHistory,
    /// Training steps actually consumed (at most one unit past the budget).
    pub env_steps: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run_id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    pub failures: Vec<RunFailure>,
    /// Oracle η per level, in config order.
    pub oracles: Vec<(Level, f64)>,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<MetricRow> {
        self.runs.iter().flat_map(|r| r.rows.iter().cloned()).collect()
    }
}

pub fn run_id(algo: &str, env: &str, level: Level, seed: u64) -> String {
    format!("{algo}-{env}-{level}-s{seed}")
}

struct Checkpoints {
    cadence: u64,
    count: u64,
    next: u64,
    /// Unit counter and score of the last evaluated policy.
    cached: Option<(u64, f64)>,
    unit: u64,
    out: Vec<(u64, f64)>,
}

impl Checkpoints {
    fn new(budget: u64, cadence: u64) -> Self {
        Self {
            cadence,
            count: budget / cadence,
            next: 1,
            cached: None,
            unit: 0,
            out: Vec::new(),
        }
    }

    fn pending(&self) -> Option<u64> {
        (self.next <= self.count).then(|| self.next * self.cadence)
    }

    fn score(&mut self, version: u64, pi: &StochasticPolicy, eval: &mut impl FnMut(&StochasticPolicy, u64) -> f64) {
        let v = match self.cached {
            Some((u, v)) if u == version => v,
            _ => {
                let v = eval(pi, self.next);
                self.cached = Some((version, v));
                v
            }
        };
        self.out.push((self.next * self.cadence, v));
        self.next += 1;
    }

    /// Records checkpoints reached by a unit ending at `after` steps.
    fn advance(
        &mut self,
        after: u64,
        before_pi: Option<&StochasticPolicy>,
        after_pi: &StochasticPolicy,
        eval: &mut impl FnMut(&StochasticPolicy, u64) -> f64,
    ) {
        let version = self.unit;
        self.unit += 1;
        while let Some(c) = self.pending() {
            if c < after {
                let pi = before_pi.expect("pre-unit policy kept whenever a checkpoint can be crossed");
                self.score(version, pi, eval);
            } else if c == after {
                self.score(version + 1, after_pi, eval);
            } else {
                break;
            }
        }
    }

    fn fill(&mut self, pi: &StochasticPolicy, eval: &mut impl FnMut(&StochasticPolicy, u64) -> f64) {
        let version = self.unit;
        while self.pending().is_some() {
            self.score(version, pi, eval);
        }
    }
}

struct Job<'a> {
    cfg: &'a ExperimentConfig,
    ctx: &'a LevelContext,
    spec: &'a AlgoSpec,
    seed: u64,
}

impl Job<'_> {
    fn run(&self) -> Result<RunOutput> {
        let started = Instant::now();
        let cfg = self.cfg;
        let env_mdp = &self.ctx.env.mdp;
        let mut eval = |pi: &StochasticPolicy, k: u64| mean_return(env_mdp, pi, cfg.eval_episodes, self.seed, k);
        let mut ck = Checkpoints::new(cfg.budget, cfg.cadence());
        let (history, env_steps, converged) = match self.spec.kind {
            AlgoKind::Erpo => self.run_erpo(&mut ck, &mut eval)?,
            _ => self.run_baseline(&mut ck, &mut eval)?,
        };
        let algo = self.spec.name();
        let env = cfg.env.family.code().to_string();
        let run_id = run_id(&algo, &env, self.ctx.level, self.seed);
        let wall_ms = if cfg.record_wall_time {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        let rows = ck
            .out
            .iter()
            .map(|&(steps, ret)| MetricRow {
                run_id: run_id.clone(),
                algo: algo.clone(),
                env: env.clone(),
                level: self.ctx.level.to_string(),
                seed: self.seed,
                env_steps: steps,
                mean_return: ret,
                eval_episodes: cfg.eval_episodes,
                wall_ms,
            })
            .collect();
        Ok(RunOutput {
            run_id,
            algo,
            level: self.ctx.level,
            seed: self.seed,
            rows,
            history,
            env_steps,
            converged,
        })
    }

    fn run_erpo(
        &self,
        ck: &mut Checkpoints,
        eval: &mut impl FnMut(&StochasticPolicy, u64) -> f64,
    ) -> Result<(TrainHistory, u64, bool)> {
        let mut ecfg = self.spec.erpo_config();
        ecfg.seed = self.seed;
        ecfg.record_wall_time = self.cfg.record_wall_time;
        let mut tr = ErpoTrainer::new(&self.ctx.env.mdp, &self.ctx.pi_star, ecfg)?;
        while !tr.is_done() && tr.env_steps() < self.cfg.budget {
            let before = tr.pi_train().clone();
            tr.step()?;
            ck.advance(tr.env_steps(), Some(&before), tr.pi_train(), eval);
        }
        ck.fill(tr.pi_train(), eval);
        let (steps, converged) = (tr.env_steps(), tr.converged());
        Ok((tr.finish().history, steps, converged))
    }

    fn run_baseline(
        &self,
        ck: &mut Checkpoints,
        eval: &mut impl FnMut(&StochasticPolicy, u64) -> f64,
    ) -> Result<(TrainHistory, u64, bool)> {
        let ctx = self.ctx;
        let mut bcfg = self.spec.baseline_config();
        bcfg.seed = self.seed;
        bcfg.max_env_steps = Some(self.cfg.budget);
        bcfg.episodes = usize::MAX;
        if self.spec.warm_start {
            bcfg.warm_start = Some(match bcfg.algo {
                Algo::QLearning | Algo::Sarsa => WarmStart {
                    q: Some(ctx.base_solution.q0.clone()),
                    ..Default::default()
                },
                Algo::ActorCritic | Algo::PpoClip => WarmStart {
                    policy: Some(ctx.pi_star.clone()),
                    values: Some(ctx.base_solution.v0.clone()),
                    ..Default::default()
                },
            });
        }
        let mut sampler = self
            .spec
            .randomize
            .then(|| ShiftSampler::new(ctx.base.clone(), Level::SHIFTED.to_vec(), DR_POOL));
        let mut learner = make_learner(&ctx.env.mdp, &bcfg)?;
        let horizon = ctx.env.mdp.horizon() as u64;
        let mut history = TrainHistory::default();
        let mut ep = 0u64;
        while learner.env_steps() < self.cfg.budget {
            let prev = learner.env_steps();
            let before = ck.pending().is_some_and(|c| prev + horizon >= c).then(|| learner.policy());
            let env: Arc<EnvInstance>;
            let mdp = match sampler.as_mut() {
                Some(s) => {
                    env = s.sample(&mut ShiftSampler::episode_stream(self.seed, ep))?;
                    &env.mdp
                }
                None => &ctx.env.mdp,
            };
            learner.train_episode(mdp, &mut episode_rng(self.seed, ep));
            ep += 1;
            if learner.env_steps() == prev {
                return Err(BenchError::Run(format!("episode {ep} consumed no steps")));
            }
            let n = ck.out.len();
            if before.is_some() {
                ck.advance(learner.env_steps(), before.as_ref(), &learner.policy(), eval);
            } else {
                ck.unit += 1;
            }
            for &(steps, eta) in &ck.out[n..] {
                history.records.push(IterRecord {
                    iter: ep as usize,
                    w: learner.exploration(),
                    eta,
                    env_steps: steps,
                    policy_l1_delta: 0.0,
                    wall_ms: 0,
                });
            }
        }
        ck.fill(&learner.policy(), eval);
        Ok((history, learner.env_steps(), false))
    }
}

/// Runs every job of `cfg` on the current rayon pool. Failed runs are
/// reported in `failures`; the rest still complete.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let contexts: Vec<LevelContext> = cfg
        .env
        .levels
        .par_iter()
        .map(|&l| LevelContext::new(&cfg, l))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for ctx in &contexts {
        for spec in &cfg.algos {
            for &seed in &cfg.seeds {
                jobs.push(Job {
                    cfg: &cfg,
                    ctx,
                    spec,
                    seed,
                });
            }
        }
    }
    let results: Vec<Result<RunOutput>> = jobs.par_iter().map(Job::run).collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (job, res) in jobs.iter().zip(results) {
        match res {
            Ok(r) => runs.push(r),
            Err(e) => failures.push(RunFailure {
                run_id: run_id(&job.spec.name(), cfg.env.family.code(), job.ctx.level, job.seed),
                error: e.to_string(),
            }),
        }
    }
    Ok(ExperimentOutput {
        runs,
        failures,
        oracles: contexts.iter().map(|c| (c.level, c.oracle)).collect(),
    })
}

#[derive(Serialize)]
struct RunSummaryRow<'a> {
    run_id: &'a str,
    algo: &'a str,
    level: String,
    seed: u64,
    env_steps: u64,
    converged: bool,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

/// Writes `metrics.csv`, `summary.csv`, `runs.csv`, `failures.csv` (only if
/// some run failed), the resolved `config.toml` and `runs/<run_id>.csv`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<()> {
    let runs_dir = dir.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(|e| BenchError::io(&runs_dir, e))?;
    let rows = out.rows();
    write(&dir.join("metrics.csv"), metrics_to_csv(&rows)?)?;
    let oracle = |_env: &str, level: &str| {
        out.oracles.iter().find(|(l, _)| l.to_string() == level).map(|&(_, o)| o)
    };
    let summary = compare_runs(&rows, cfg.threshold, oracle);
    write(&dir.join("summary.csv"), summary_to_csv(&summary)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &out.runs {
        w.serialize(RunSummaryRow {
            run_id: &r.run_id,
            algo: &r.algo,
            level: r.level.to_string(),
            seed: r.seed,
            env_steps: r.env_steps,
            converged: r.converged,
        })?;
    }
    write(&dir.join("runs.csv"), w.into_inner().map_err(|e| BenchError::Run(e.to_string()))?)?;
    for r in &out.runs {
        write(&runs_dir.join(format!("{}.csv", r.run_id)), r.history.to_csv())?;
    }
    let failures = dir.join("failures.csv");
    if out.failures.is_empty() {
        if failures.exists() {
            std::fs::remove_file(&failures).map_err(|e| BenchError::io(&failures, e))?;
        }
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        for f in &out.failures {
            w.serialize(f)?;
        }
        write(&failures, w.into_inner().map_err(|e| BenchError::Run(e.to_string()))?)?;
    }
    write(&dir.join("config.toml"), cfg.to_toml())
}
