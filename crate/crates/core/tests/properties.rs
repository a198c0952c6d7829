use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syncma_core::diagnostics::{bridge_run, oracle_run};
use syncma_core::harness::{run_trial, summarize, FileConfig, OptimizerSpec, RunConfig};
use syncma_core::objectives::Function;
use syncma_core::syncma::{MemoryRule, QEvalPoint, SynCma, SynCmaConfig};
use syncma_core::Vector;

#[test]
fn memory_matches_history_across_dimensions() {
    for n in [2, 5] {
        for lambda0 in [0.5, 3.0] {
            let r = oracle_run(n, 15, lambda0, 1, 5).unwrap();
            assert!(r.within(1e-9, 1e-9), "n={n} lambda0={lambda0}: {r:?}");
        }
    }
}

#[test]
fn bridge_is_exact_in_other_dimensions() {
    for n in [2, 3, 16] {
        assert!(bridge_run(n, 10, n as u64).unwrap() <= 1e-12);
    }
}

fn translated_run(config: &SynCmaConfig, offset: f64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m0 = Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
    let mut opt = SynCma::new(m0.add_scalar(offset), config.clone()).unwrap();
    let mut means = Vec::new();
    for _ in 0..15 {
        let xs = opt.ask(&mut rng).unwrap();
        let values = xs
            .iter()
            .map(|x| Function::Rosenbrock.base(x.add_scalar(-offset).as_slice()))
            .collect();
        opt.tell_values(xs, values).unwrap();
        means.push(opt.state().params.mean.add_scalar(-offset));
    }
    means
}

fn max_gap(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}

#[test]
fn default_update_is_translation_equivariant() {
    let config = SynCmaConfig::default();
    assert!(
        max_gap(
            &translated_run(&config, 0.0),
            &translated_run(&config, 25.0)
        ) < 1e-8
    );
}

#[test]
fn printed_memory_rule_depends_on_the_origin() {
    let config = SynCmaConfig {
        memory_rule: MemoryRule::Printed,
        q_eval_point: QEvalPoint::CurrentMean,
        ..SynCmaConfig::default()
    };
    assert!(
        max_gap(
            &translated_run(&config, 0.0),
            &translated_run(&config, 25.0)
        ) > 1e-6
    );
}

#[test]
fn toml_config_runs_end_to_end() {
    let config = FileConfig::from_toml(
        "function = \"levymontalvo\"\ndim = 4\noptimizer = \"syncma\"\nlambda0 = 1.0\nbudget = 400\ntrials = 3\nseed = 9\n",
    )
    .unwrap()
    .into_run_config();
    let traces: Vec<_> = (0..config.trials)
        .map(|k| run_trial(&config, k).unwrap())
        .collect();
    for t in &traces {
        assert_eq!(t.points.len(), 400 / 8);
        assert!(t
            .points
            .windows(2)
            .all(|w| w[1].best_value <= w[0].best_value));
    }
    let s = summarize(&traces, config.hit_threshold);
    assert!(s.q25 <= s.median_best && s.median_best <= s.q75);
}

#[test]
fn trials_differ_but_repeat() {
    let config = RunConfig {
        budget: 200,
        trials: 2,
        ..RunConfig::new(Function::Schaffer, 5, OptimizerSpec::CmaEs { sigma0: 0.1 })
    };
    assert_eq!(
        run_trial(&config, 1).unwrap(),
        run_trial(&config, 1).unwrap()
    );
    assert_ne!(
        run_trial(&config, 0).unwrap(),
        run_trial(&config, 1).unwrap()
    );
}
