use erpo_core::erpo::{
    estimate_fitness, exact_replicator_step, mix_policies, replicator_row, replicator_update, shift_fitness,
    PositivityMode,
};
use erpo_core::mdp::{
    evaluate_policy_exact, random_mdp, rollout, tv_distance, value_iteration, RandomMdpSpec, SolveOptions,
};
use erpo_core::policy::argmax;
use erpo_core::rng::stream;
use erpo_core::{StochasticPolicy, Trajectory};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|w| {
        let z: f64 = w.iter().sum();
        if z == 0.0 {
            vec![1.0 / w.len() as f64; w.len()]
        } else {
            w.into_iter().map(|x| x / z).collect()
        }
    })
}

fn small_spec() -> impl Strategy<Value = (RandomMdpSpec, u64)> {
    (3usize..=6, 1usize..=3, 0.5f64..0.95, any::<bool>(), any::<u64>()).prop_map(|(n, m, g, pos, seed)| {
        (
            RandomMdpSpec {
                num_states: n,
                num_actions: m,
                discount: g,
                positive_rewards: pos,
                horizon: 30,
                ..RandomMdpSpec::default()
            },
            seed,
        )
    })
}

fn policy_for(n: usize, m: usize, seed: u64) -> StochasticPolicy {
    use rand::Rng;
    let mut rng = stream(seed, &[7]);
    let logits: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-3.0..3.0)).collect();
    StochasticPolicy::softmax(n, m, &logits)
}

fn assert_simplex(p: &StochasticPolicy) {
    for row in p.rows() {
        assert!(row.iter().all(|&x| x >= 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

proptest! {
    #[test]
    fn replicator_is_the_classic_equation(
        (x, f) in (2usize..6).prop_flat_map(|n| (simplex(n), prop::collection::vec(0.01f64..100.0, n)))
    ) {
        let mut out = vec![0.0; x.len()];
        replicator_row(&x, &f, &mut out, 0).unwrap();
        let fbar: f64 = x.iter().zip(&f).map(|(a, b)| a * b).sum();
        for i in 0..x.len() {
            prop_assert!((out[i] - x[i] * f[i] / fbar).abs() <= 1e-12);
        }
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn zero_share_stays_zero(
        (x, f, k) in (2usize..6).prop_flat_map(|n| (simplex(n), prop::collection::vec(0.01f64..100.0, n), 0..n))
    ) {
        let mut x = x;
        let lost = x[k];
        x[k] = 0.0;
        if lost < 1.0 {
            let z = 1.0 - lost;
            for v in x.iter_mut() { *v /= z; }
            let mut out = vec![0.0; x.len()];
            replicator_row(&x, &f, &mut out, 0).unwrap();
            prop_assert_eq!(out[k], 0.0);
        }
    }

    #[test]
    fn shifting_keeps_fitness_order(
        rewards in prop::collection::vec(-50.0f64..50.0, 3),
        kappa in 0.1f64..5.0,
    ) {
        let batch: Vec<Trajectory> = rewards.iter().enumerate().map(|(a, &r)| Trajectory {
            steps: vec![erpo_core::mdp::Step { state: 0, action: a, reward: r }],
            final_state: 1,
            truncated: false,
        }).collect();
        let fit = estimate_fitness(&batch, 2, 3, 1.0);
        let before: Vec<f64> = (0..3).map(|a| fit.f_sa(0, a).unwrap()).collect();
        for mode in [PositivityMode::AffineMin, PositivityMode::FixedOffset, PositivityMode::None] {
            let g = shift_fitness(&fit, mode, kappa);
            let after: Vec<f64> = (0..3).map(|a| g.f_sa(0, a).unwrap()).collect();
            prop_assert_eq!(argmax(&before), argmax(&after));
            if mode == PositivityMode::AffineMin {
                prop_assert!(after.iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn optimum_dominates_any_policy((spec, seed) in small_spec()) {
        let m = random_mdp(&spec, seed).unwrap();
        let (v_star, _) = value_iteration(&m, 1e-12).unwrap();
        let pi = policy_for(spec.num_states, spec.num_actions, seed);
        let (v, q) = evaluate_policy_exact(&m, &pi, 1e-12).unwrap();
        for s in 0..spec.num_states {
            prop_assert!(v_star.get(s) >= v.get(s) - 1e-8);
            let mix: f64 = (0..spec.num_actions).map(|a| pi.prob(s, a) * q.get(s, a)).sum();
            prop_assert!((mix - v.get(s)).abs() <= 1e-9);
        }
    }

    #[test]
    fn tv_is_symmetric_and_bounded((spec, seed) in small_spec(), other in any::<u64>()) {
        let a = random_mdp(&spec, seed).unwrap();
        let b = random_mdp(&spec, other).unwrap();
        let ab = tv_distance(&a, &b).unwrap();
        let ba = tv_distance(&b, &a).unwrap();
        prop_assert!((ab.max - ba.max).abs() <= 1e-12);
        prop_assert!((ab.mean - ba.mean).abs() <= 1e-12);
        prop_assert!(ab.max >= 0.0 && ab.max <= 1.0 + 1e-12);
    }

    #[test]
    fn rollouts_are_reproducible((spec, seed) in small_spec(), ep in any::<u64>()) {
        let m = random_mdp(&spec, seed).unwrap();
        let pi = policy_for(spec.num_states, spec.num_actions, seed);
        let a = rollout(&m, &pi, &mut stream(seed, &[ep]));
        let b = rollout(&m, &pi, &mut stream(seed, &[ep]));
        prop_assert_eq!(&a, &b);
        prop_assert!(a.len() <= m.horizon());
    }

    #[test]
    fn policy_mutations_keep_rows_on_the_simplex((spec, seed) in small_spec(), w in 0.0f64..=1.0) {
        let spec = RandomMdpSpec { positive_rewards: true, ..spec };
        let m = random_mdp(&spec, seed).unwrap();
        let (n, k) = (spec.num_states, spec.num_actions);
        let pi = policy_for(n, k, seed);
        assert_simplex(&pi);
        let mixed = mix_policies(&pi, &StochasticPolicy::uniform(n, k), w).unwrap();
        assert_simplex(&mixed);
        let batch: Vec<Trajectory> = (0..20).map(|e| rollout(&m, &mixed, &mut stream(seed, &[e]))).collect();
        let fit = shift_fitness(&estimate_fitness(&batch, n, k, spec.discount), PositivityMode::AffineMin, 1.0);
        assert_simplex(&replicator_update(&mixed, &fit).unwrap());
        let step = exact_replicator_step(&m, &mixed, None, SolveOptions::with_tol(1e-12), None).unwrap();
        for row in step.policy.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

/// Independent oracle: list every occurrence, then average.
#[test]
fn fitness_matches_occurrence_enumeration() {
    let spec = RandomMdpSpec { num_states: 8, num_actions: 3, positive_rewards: false, horizon: 40, ..Default::default() };
    let m = random_mdp(&spec, 31).unwrap();
    let pi = StochasticPolicy::uniform(8, 3);
    let batch: Vec<Trajectory> = (0..50).map(|e| rollout(&m, &pi, &mut stream(2, &[e]))).collect();
    let gamma = 0.9;
    let fit = estimate_fitness(&batch, 8, 3, gamma);
    let mut occurrences: Vec<(usize, usize, f64)> = Vec::new();
    for traj in &batch {
        for t in 0..traj.len() {
            let g: f64 = traj.steps[t..]
                .iter()
                .enumerate()
                .map(|(k, st)| gamma.powi(k as i32) * st.reward)
                .sum();
            occurrences.push((traj.steps[t].state, traj.steps[t].action, g));
        }
    }
    for s in 0..8 {
        for a in 0..3 {
            let hits: Vec<f64> = occurrences.iter().filter(|o| o.0 == s && o.1 == a).map(|o| o.2).collect();
            match fit.f_sa(s, a) {
                None => assert!(hits.is_empty()),
                Some(f) => {
                    let mean = hits.iter().sum::<f64>() / hits.len() as f64;
                    assert!((f - mean).abs() <= 1e-9 * (1.0 + mean.abs()), "({s},{a}) {f} vs {mean}");
                }
            }
        }
    }
}
