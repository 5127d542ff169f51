use erpo_bench::runner::{run_experiment, write_outputs};
use erpo_bench::{AlgoKind, AlgoSpec, EnvSpec, ExperimentConfig};
use erpo_envs::{Family, Level};

fn config(family: Family, budget: u64, eval_every: u64) -> ExperimentConfig {
    let mut erpo = AlgoSpec::new(AlgoKind::Erpo);
    erpo.erpo = Some(erpo_core::erpo::ErpoConfig {
        batch_size: 4,
        ..Default::default()
    });
    ExperimentConfig {
        seeds: vec![0, 7],
        budget,
        eval_every: Some(eval_every),
        eval_episodes: 4,
        threshold: 0.9,
        output_dir: "unused".into(),
        record_wall_time: false,
        env: EnvSpec {
            family,
            levels: vec![Level::L2],
            instance_seed: 0,
        },
        algos: vec![
            erpo,
            AlgoSpec::new(AlgoKind::Sarsa),
            AlgoSpec::new(AlgoKind::ActorCritic).warm(),
            AlgoSpec::new(AlgoKind::PpoClip).randomized(),
        ],
    }
}

#[test]
fn exact_row_count_and_increasing_steps() {
    let cfg = config(Family::DistShift, 10_000, 1000);
    let out = run_experiment(&cfg).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.runs.len(), 8);
    for r in &out.runs {
        assert_eq!(r.rows.len(), 10, "{}", r.run_id);
        assert!(r.rows.windows(2).all(|w| w[0].env_steps < w[1].env_steps));
        assert_eq!(r.rows.last().unwrap().env_steps, 10_000);
    }
}

#[test]
fn identical_invocations_identical_bytes() {
    let cfg = config(Family::FrozenLake, 3000, 500);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_outputs(&cfg, &run_experiment(&cfg).unwrap(), a.path()).unwrap();
    write_outputs(&cfg, &run_experiment(&cfg).unwrap(), b.path()).unwrap();
    for f in ["metrics.csv", "summary.csv", "runs.csv", "config.toml", "runs/erpo-FL-L2-s7.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
