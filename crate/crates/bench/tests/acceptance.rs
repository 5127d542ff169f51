//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (bypassing the harness capture) and then asserts the same outcome.

use std::io::Write as _;
use std::time::Instant;

use erpo_baselines::search::{astar_graph, bfs_graph, idastar_graph};
use erpo_baselines::{astar, episode_rng, idastar, make_learner, path_return, Algo, BaselineConfig, ShiftSampler};
use erpo_bench::grid::{custom_grid_experiment, GridAlgo, GridOptions};
use erpo_bench::runner::{run_experiment, write_outputs};
use erpo_bench::{emit_plot, AlgoKind, AlgoSpec, EnvSpec, ExperimentConfig};
use erpo_core::erpo::{
    estimate_fitness, exact_replicator_step, exact_replicator_trace, mix_policies, replicator_update, shift_fitness,
    ErpoConfig, ErpoTrainer, PositivityMode,
};
use erpo_core::mdp::{
    horizon_optimum, horizon_policy_return, optimal_q, random_mdp, rollout, value_iteration, RandomMdpSpec,
    SolveOptions,
};
use erpo_core::rng::stream;
use erpo_core::StochasticPolicy;
use erpo_envs::{build_env, shape_rewards, Cell, EnvInstance, Family, GridLayout, Level, MovementGraph, BETA_HI};
use rand::Rng;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {n:>2} {verdict}: {name} ({detail})");
}

fn check(n: u32, name: &str, pass: bool, detail: String) {
    report(n, name, pass, &detail);
    assert!(pass, "criterion {n} failed: {detail}");
}

fn random_rows(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        })
        .collect()
}

#[test]
fn criterion_01_exact_replicator_is_monotone() {
    let started = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut unreached = 0;
    for seed in 0..100u64 {
        let mut rng = stream(seed, &[0xC1]);
        let spec = RandomMdpSpec {
            num_states: rng.gen_range(2..=20),
            num_actions: rng.gen_range(1..=4),
            discount: rng.gen_range(0.5..0.9),
            positive_rewards: true,
            ..RandomMdpSpec::default()
        };
        let m = random_mdp(&spec, seed).unwrap();
        let (v_star, _) = value_iteration(&m, 1e-13).unwrap();
        let init = StochasticPolicy::from_rows(m.num_actions(), random_rows(&mut rng, m.num_states(), m.num_actions()))
            .unwrap();
        let t = exact_replicator_trace(&m, &init, v_star.as_slice(), 1e-6, 200_000, SolveOptions::with_tol(1e-13))
            .unwrap();
        worst = worst.max(t.worst_decrease);
        worst_gap = worst_gap.max(t.final_gap);
        unreached += usize::from(!t.reached);
    }
    let secs = started.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && unreached == 0 && worst_gap <= 1e-6 && secs < 60.0;
    check(
        1,
        "exact replicator monotone on 100 random MDPs",
        pass,
        format!("max decrease {worst:.2e}, max final gap {worst_gap:.2e}, unreached {unreached}, {secs:.1}s"),
    );
}

#[test]
fn criterion_02_replicator_update_matches_classic_equation() {
    let started = Instant::now();
    let mut rng = stream(2, &[0xC2]);
    let mut max_err = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=6);
        let row = random_rows(&mut rng, 1, m).remove(0);
        let f: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..100.0)).collect();
        let pi = StochasticPolicy::from_rows(m, vec![row.clone()]).unwrap();
        let mut fit = erpo_core::erpo::FitnessTable::new(1, m);
        for (a, &g) in f.iter().enumerate() {
            fit.record(0, a, g);
        }
        let out = replicator_update(&pi, &fit).unwrap();
        let fbar: f64 = row.iter().zip(&f).map(|(x, y)| x * y).sum();
        for a in 0..m {
            let classic = row[a] + row[a] * (f[a] - fbar) / fbar;
            max_err = max_err.max((out.prob(0, a) - classic).abs());
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        2,
        "replicator_update equals x + x(f - fbar)/fbar",
        max_err <= 1e-12 && secs < 1.0,
        format!("max error {max_err:.2e} over 1000 rows, {secs:.3}s"),
    );
}

fn simplex_violation(p: &StochasticPolicy) -> f64 {
    p.rows()
        .map(|r| {
            let neg = r.iter().cloned().fold(0.0f64, |acc, x| acc.max(-x));
            neg.max((r.iter().sum::<f64>() - 1.0).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_03_policy_operations_stay_on_the_simplex() {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut see = |p: &StochasticPolicy| {
        worst = worst.max(simplex_violation(p));
        checked += 1;
    };
    for seed in 0..40u64 {
        let mut rng = stream(seed, &[0xC3]);
        let spec = RandomMdpSpec {
            num_states: rng.gen_range(3..=12),
            num_actions: rng.gen_range(2..=4),
            positive_rewards: seed % 2 == 0,
            horizon: 40,
            ..RandomMdpSpec::default()
        };
        let m = random_mdp(&spec, seed).unwrap();
        let (n, k) = (m.num_states(), m.num_actions());
        let logits: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let soft = StochasticPolicy::softmax(n, k, &logits);
        see(&soft);
        let uni = StochasticPolicy::uniform(n, k);
        see(&mix_policies(&soft, &uni, rng.gen_range(0.0..=1.0)).unwrap());
        let batch: Vec<_> = (0..16).map(|e| rollout(&m, &soft, &mut stream(seed, &[e]))).collect();
        let fit = estimate_fitness(&batch, n, k, m.discount());
        for mode in [PositivityMode::AffineMin, PositivityMode::FixedOffset] {
            let shifted = shift_fitness(&fit, mode, 1.0);
            if let Ok(p) = replicator_update(&soft, &shifted) {
                see(&p);
            }
        }
        if let Ok(step) = exact_replicator_step(&m, &soft, None, SolveOptions::with_tol(1e-10), Some(1.0)) {
            see(&step.policy);
        }
        let (_, greedy) = value_iteration(&m, 1e-10).unwrap();
        see(&greedy);
        let mut tr = ErpoTrainer::new(&m, &greedy, ErpoConfig { batch_size: 8, seed, ..Default::default() }).unwrap();
        for _ in 0..10 {
            tr.step().unwrap();
            see(tr.pi_train());
            see(tr.pi_new());
        }
        for algo in [Algo::QLearning, Algo::Sarsa, Algo::ActorCritic, Algo::PpoClip] {
            let cfg = BaselineConfig { algo, seed, ppo_batch: 2, ..Default::default() };
            let mut l = make_learner(&m, &cfg).unwrap();
            for ep in 0..6 {
                l.train_episode(&m, &mut episode_rng(seed, ep));
                see(&l.policy());
            }
        }
    }
    let base = erpo_envs::base_env(Family::CliffWalking).unwrap();
    let mut sampler = ShiftSampler::new(base, Level::SHIFTED.to_vec(), 4);
    let cfg = BaselineConfig { algo: Algo::PpoClip, episodes: 20, ..Default::default() };
    see(&erpo_baselines::domain_randomization_train(&mut sampler, &cfg).unwrap());
    check(
        3,
        "rows sum to 1 and stay non-negative after every policy update",
        worst <= 1e-9,
        format!("{checked} policies, worst violation {worst:.2e}"),
    );
}

#[test]
fn criterion_04_erpo_reaches_the_oracle_on_l1() {
    const BUDGET: u64 = 1_000_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for family in [Family::FrozenLake, Family::CliffWalking, Family::Taxi] {
        let base = erpo_envs::base_env(family).unwrap();
        let pi_star = horizon_optimum(&base.mdp).policy();
        let env = build_env(family, Level::L1, 0).unwrap();
        let oracle = horizon_optimum(&env.mdp).eta;
        let mut finals: Vec<f64> = (0..5u64)
            .map(|seed| {
                let cfg = ErpoConfig { seed, ..Default::default() };
                let mut tr = ErpoTrainer::new(&env.mdp, &pi_star, cfg).unwrap();
                while !tr.is_done() && tr.env_steps() < BUDGET {
                    tr.step().unwrap();
                }
                horizon_policy_return(&env.mdp, tr.pi_train()).unwrap()
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        let median = finals[2];
        let ok = median >= 0.9 * oracle;
        pass &= ok;
        lines.push(format!("{family}: median {median:.1} / oracle {oracle:.1} = {:.3}", median / oracle));
    }
    check(4, "ERPO median final return >= 0.9 x oracle on FL/CW/TX L1", pass, lines.join("; "));
}

/// Median over seeds with unreached runs counted as infinitely slow.
fn median_steps(out: &erpo_bench::ExperimentOutput, algo: &str, level: Level, threshold: f64) -> f64 {
    let mut xs: Vec<f64> = out
        .runs
        .iter()
        .filter(|r| r.algo == algo && r.level == level)
        .map(|r| {
            r.rows
                .iter()
                .find(|x| x.mean_return >= threshold)
                .map_or(f64::INFINITY, |x| x.env_steps as f64)
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn criterion_05_erpo_adapts_no_slower_than_baselines() {
    let rivals = ["q_learning", "q_learning_b", "ppo_clip"];
    let mut table = vec![format!("{:<6}{:<5}{:>10}{:>14}{:>14}{:>12}  verdict", "env", "lvl", "erpo", rivals[0], rivals[1], rivals[2])];
    let mut exceptions = Vec::new();
    for family in Family::ALL {
        let cfg = ExperimentConfig {
            seeds: (0..5).collect(),
            budget: 1_000_000,
            eval_every: Some(10_000),
            eval_episodes: 20,
            threshold: 0.9,
            output_dir: "unused".into(),
            record_wall_time: false,
            env: EnvSpec {
                family,
                levels: Level::SHIFTED.to_vec(),
                instance_seed: 0,
            },
            algos: vec![
                AlgoSpec::new(AlgoKind::Erpo),
                AlgoSpec::new(AlgoKind::QLearning),
                AlgoSpec::new(AlgoKind::QLearning).warm(),
                AlgoSpec::new(AlgoKind::PpoClip),
            ],
        };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        for &(level, oracle) in &out.oracles {
            let thr = erpo_bench::compare::threshold_return(oracle, cfg.threshold);
            let e = median_steps(&out, "erpo", level, thr);
            let others: Vec<f64> = rivals.iter().map(|a| median_steps(&out, a, level, thr)).collect();
            let beaten: Vec<&str> = rivals.iter().zip(&others).filter(|(_, &o)| e > o).map(|(a, _)| *a).collect();
            let verdict = if beaten.is_empty() {
                "ok".to_string()
            } else {
                exceptions.push(format!("{family}-{level}"));
                format!("EXCEPTION: slower than {}", beaten.join(", "))
            };
            let f = |x: f64| if x.is_finite() { format!("{x:.0}") } else { "-".into() };
            table.push(format!(
                "{:<6}{:<5}{:>10}{:>14}{:>14}{:>12}  {verdict}",
                family.code(),
                level.code(),
                f(e),
                f(others[0]),
                f(others[1]),
                f(others[2])
            ));
        }
    }
    {
        let mut err = std::io::stderr().lock();
        for line in &table {
            let _ = writeln!(err, "  {line}");
        }
    }
    let detail = if exceptions.is_empty() {
        "no exceptions".to_string()
    } else {
        format!("{} of 15 cells flagged: {}", exceptions.len(), exceptions.join(" "))
    };
    check(5, "ERPO median steps-to-threshold <= Q-learning, Q-learning-B, PPO", exceptions.is_empty(), detail);
}

#[test]
fn criterion_06_shift_bound_holds() {
    let mut max_beta = 0.0f64;
    let mut over = 0;
    let mut non_monotone = 0;
    let mut instances = 0;
    for family in Family::ALL {
        for seed in 0..10u64 {
            let betas: Vec<f64> = Level::SHIFTED
                .iter()
                .map(|&l| build_env(family, l, seed).unwrap().beta)
                .collect();
            instances += betas.len();
            for &b in &betas {
                max_beta = max_beta.max(b);
                over += usize::from(b > BETA_HI);
            }
            non_monotone += usize::from(betas.windows(2).any(|w| w[1] < w[0]));
        }
    }
    check(
        6,
        "every L1-L3 instance has beta <= 0.4, weakly increasing with level",
        over == 0 && non_monotone == 0,
        format!("{instances} instances, max beta {max_beta:.3}, {over} over bound, {non_monotone} non-monotone"),
    );
}

fn random_gridworld(seed: u64) -> EnvInstance {
    let mut rng = stream(seed, &[0xC7]);
    let (h, w) = (rng.gen_range(3..=8), rng.gen_range(3..=8));
    let mut g = GridLayout::new(h, w);
    for r in 0..h {
        for c in 0..w {
            if rng.gen_bool(0.15) {
                g.set(r, c, Cell::Hole);
            }
        }
    }
    let goal = (rng.gen_range(0..h), rng.gen_range(0..w));
    g.set(goal.0, goal.1, Cell::Goal);
    let start = loop {
        let p = (rng.gen_range(0..h), rng.gen_range(0..w));
        if p != goal {
            break p;
        }
    };
    g.set(start.0, start.1, Cell::Floor);
    g.starts.push(start);
    g.slip = rng.gen_range(0.0..0.3);
    let mut dynamics = Family::FrozenLake.dynamics();
    dynamics.rewards.step = -rng.gen_range(0.0..1.0);
    dynamics.rewards.goal = rng.gen_range(1.0..20.0);
    dynamics.rewards.goal_time_penalty = 0.0;
    dynamics.horizon = 100;
    dynamics.discount = rng.gen_range(0.8..0.99);
    EnvInstance::from_layout(Family::FrozenLake, Level::Base, seed, g, dynamics).unwrap()
}

#[test]
fn criterion_07_shaping_keeps_optimal_actions() {
    let best = |q: &[f64]| {
        let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..q.len()).filter(|&i| q[i] >= m - 1e-7).collect::<Vec<_>>()
    };
    let mut mismatched = 0;
    let mut states = 0;
    for seed in 0..50u64 {
        let env = random_gridworld(seed);
        let mut rng = stream(seed, &[0xC7, 1]);
        let phi: Vec<f64> = (0..env.mdp.num_states()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let shaped = shape_rewards(&env.mdp, &phi).unwrap();
        let a = optimal_q(&env.mdp, 1e-12).unwrap();
        let b = optimal_q(&shaped, 1e-12).unwrap();
        for s in 0..env.mdp.num_states() {
            states += 1;
            mismatched += usize::from(best(a.row(s)) != best(b.row(s)));
        }
    }
    check(
        7,
        "optimal action sets identical with and without potential shaping",
        mismatched == 0,
        format!("50 gridworlds, {states} states, {mismatched} mismatched"),
    );
}

fn random_maze(seed: u64) -> (EnvInstance, usize, usize) {
    let mut rng = stream(seed, &[0xC8]);
    let (h, w) = (rng.gen_range(4..=25), rng.gen_range(4..=25));
    let mut g = GridLayout::new(h, w);
    let wall_p = rng.gen_range(0.0..0.35);
    for r in 0..h {
        for c in 0..w {
            if rng.gen_bool(wall_p) {
                g.set(r, c, Cell::HARD_WALL);
            }
        }
    }
    let goal = (rng.gen_range(0..h), rng.gen_range(0..w));
    let start = loop {
        let p = (rng.gen_range(0..h), rng.gen_range(0..w));
        if p != goal {
            break p;
        }
    };
    g.set(start.0, start.1, Cell::Floor);
    g.set(goal.0, goal.1, Cell::Goal);
    g.starts.push(start);
    let mut dynamics = Family::ReachAvoid.dynamics();
    dynamics.horizon = 4 * h * w;
    let env = EnvInstance::from_layout(Family::ReachAvoid, Level::Base, seed, g, dynamics).unwrap();
    let (s, t) = (env.layout.index(start.0, start.1), env.layout.index(goal.0, goal.1));
    (env, s, t)
}

#[test]
fn criterion_08_heuristic_search() {
    let mut astar_bfs = 0;
    let mut ida_astar = 0;
    let mut unsolvable = 0;
    for seed in 0..100u64 {
        let (env, s, t) = random_maze(seed);
        let graph = MovementGraph::new(&env);
        let a = astar_graph(&graph, s, t);
        let b = bfs_graph(&graph, s, t);
        let i = idastar_graph(&graph, s, t);
        unsolvable += usize::from(!b.found);
        astar_bfs += usize::from(a.found != b.found || (b.found && a.cost != b.cost));
        ida_astar += usize::from(i.found != a.found || (a.found && i.cost != a.cost));
    }
    let cw = build_env(Family::CliffWalking, Level::Base, 0).unwrap();
    let (h, w) = (cw.layout.height, cw.layout.width);
    let start = cw.layout.index(h - 1, 0);
    let goal = cw.layout.index(h - 1, w - 1);
    let ida_reward = path_return(&cw, &idastar(&cw, start, goal)).unwrap_or(f64::NEG_INFINITY);
    let astar_reward = path_return(&cw, &astar(&cw, start, goal)).unwrap_or(f64::NEG_INFINITY);
    let ida_ok = (ida_reward - 2000.0).abs() <= 0.25 * 2000.0;
    let astar_ok = (-350.0..=-150.0).contains(&astar_reward);
    check(
        8,
        "A* = BFS and IDA* = A* on random grids; CliffWalking search rewards",
        astar_bfs == 0 && ida_astar == 0 && ida_ok && astar_ok,
        format!(
            "100 grids ({unsolvable} unsolvable): A*!=BFS {astar_bfs}, IDA*!=A* {ida_astar}; \
             CW IDA* reward {ida_reward:.0} (want 2000 +/- 25%: {}), A* reward {astar_reward:.0} (want [-350, -150]: {})",
            if ida_ok { "ok" } else { "out of range" },
            if astar_ok { "ok" } else { "out of range" }
        ),
    );
}

fn grid_verdict(size: usize, seeds: &[u64]) -> (bool, String, f64) {
    let started = Instant::now();
    let rep = custom_grid_experiment(size, 0.2, seeds, &GridOptions::default()).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let path = |a| rep.mean_path(a).unwrap_or(f64::INFINITY);
    let success = |a| rep.summary.iter().find(|s| s.algo == a).map_or(0.0, |s| s.success_rate);
    let (e, p, q, s) = (path(GridAlgo::Erpo), path(GridAlgo::PpoClip), path(GridAlgo::QLearning), path(GridAlgo::AStar));
    let pass = e <= p && (e - s).abs() <= 0.05 * s;
    let detail = format!(
        "{size}x{size}: ERPO {e:.2} (success {:.2}), PPO {p:.2} (success {:.2}), Q {q:.2} (success {:.2}), A* {s:.2}, {secs:.1}s",
        success(GridAlgo::Erpo),
        success(GridAlgo::PpoClip),
        success(GridAlgo::QLearning)
    );
    (pass, detail, secs)
}

#[test]
fn criterion_09_grid_path_lengths() {
    let seeds: Vec<u64> = (0..5).collect();
    let (big, big_detail, _) = grid_verdict(100, &seeds);
    let (small, small_detail, secs) = grid_verdict(30, &seeds);
    check(
        9,
        "ERPO path <= PPO path and within 5% of A* (100x100 and 30x30 under 60 s)",
        big && small && secs < 60.0,
        format!("{big_detail}; {small_detail}"),
    );
}

fn determinism_config() -> ExperimentConfig {
    let mut erpo = AlgoSpec::new(AlgoKind::Erpo);
    erpo.erpo = Some(ErpoConfig { batch_size: 16, ..Default::default() });
    ExperimentConfig {
        seeds: vec![0, 1, 2],
        budget: 20_000,
        eval_every: Some(2_000),
        eval_episodes: 10,
        threshold: 0.9,
        output_dir: "results".into(),
        record_wall_time: false,
        env: EnvSpec {
            family: Family::WallsLava,
            levels: vec![Level::L1, Level::L3],
            instance_seed: 3,
        },
        algos: vec![
            erpo,
            AlgoSpec::new(AlgoKind::QLearning).warm(),
            AlgoSpec::new(AlgoKind::Sarsa),
            AlgoSpec::new(AlgoKind::ActorCritic).warm(),
            AlgoSpec::new(AlgoKind::PpoClip).randomized(),
        ],
    }
}

fn outputs_with_threads(threads: usize) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let cfg = determinism_config();
        let out = run_experiment(&cfg).unwrap();
        write_outputs(&cfg, &out, dir.path()).unwrap();
        emit_plot(&out.rows(), &dir.path().join("curves.svg")).unwrap();
    });
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut stack = vec![dir.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir.path()).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn criterion_10_outputs_are_byte_identical() {
    let one = outputs_with_threads(1);
    let again = outputs_with_threads(1);
    let four = outputs_with_threads(4);
    let differing: Vec<&str> = one
        .iter()
        .zip(&four)
        .chain(one.iter().zip(&again))
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let pass = one.len() == four.len() && one.len() == again.len() && differing.is_empty();
    check(
        10,
        "repeated runs give byte-identical CSV and SVG at 1 and 4 threads",
        pass,
        format!("{} files compared, {} differ", one.len(), differing.len()),
    );
}
