//! Monte-Carlo checks against exact oracles.

use vwls_mdvi::design::{frank_wolfe, WeightingFunction};
use vwls_mdvi::harness::{final_gaps, mean_stderr, run_experiment, ExperimentConfig, MdpParams};
use vwls_mdvi::linear_mdp::{
    exact_optimal_values, make_hard_linear_mdp, variance_of_value, DEFAULT_ORACLE_TOL,
};
use vwls_mdvi::mdvi::{variance_estimation, variance_estimation_with_design, SamplerMode};
use vwls_mdvi::registry::{AlgorithmSpec, SolverRegistry};
use vwls_mdvi::rng::Streams;

#[test]
fn next_state_frequencies() {
    let mdp = make_hard_linear_mdp(30, 4, 0.9, 17).unwrap();
    let n = 1_000_000;
    for a in [0, 7, 29] {
        let mut rng = Streams::new(5).stream(a as u64, 0);
        let draws = mdp.sample_next_states(0, a, n, &mut rng);
        let freq = draws.iter().filter(|&&y| y == 0).count() as f64 / n as f64;
        let p = mdp.transition(0, a, 0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "action {a}: {freq} vs {p}");

        let absorbed = mdp.sample_next_states(1, a, 1000, &mut rng);
        assert!(absorbed.iter().all(|&y| y == 1));
    }
}

#[test]
fn sampling_is_reproducible() {
    let mdp = make_hard_linear_mdp(30, 4, 0.9, 17).unwrap();
    let draw = || mdp.sample_next_states(0, 3, 500, &mut Streams::new(9).child(2).stream(4, 1));
    assert_eq!(draw(), draw());
}

#[test]
fn paired_variance_estimator_is_unbiased() {
    let mdp = make_hard_linear_mdp(30, 4, 0.9, 23).unwrap();
    let v = exact_optimal_values(&mdp, DEFAULT_ORACLE_TOL)
        .unwrap()
        .values;
    let exact = variance_of_value(&mdp, v.values());
    let design = frank_wolfe(&mdp, &WeightingFunction::ones(&mdp), 0.01, None).unwrap();
    let core = design.core_pairs();
    let runs = 200;
    let mut samples = vec![Vec::with_capacity(runs); core.len()];
    for run in 0..runs {
        let est = variance_estimation_with_design(
            &mdp,
            v.values(),
            SamplerMode::monte_carlo(100).unwrap(),
            design.clone(),
            &Streams::new(run as u64),
        )
        .unwrap();
        for (slot, e) in samples.iter_mut().zip(&est.estimates) {
            slot.push(*e);
        }
    }
    for (&p, values) in core.iter().zip(&samples) {
        let (mean, se) = mean_stderr(values);
        let target = exact.values()[p];
        assert!(
            (mean - target).abs() <= 3.0 * se.max(1e-12),
            "pair {p}: {mean} vs {target} (se {se})"
        );
    }
}

#[test]
fn learned_variance_matches_exact() {
    let mdp = make_hard_linear_mdp(30, 4, 0.9, 29).unwrap();
    let v = exact_optimal_values(&mdp, DEFAULT_ORACLE_TOL)
        .unwrap()
        .values;
    let exact = variance_of_value(&mdp, v.values());
    let est = variance_estimation(
        &mdp,
        v.values(),
        SamplerMode::monte_carlo(1_000_000).unwrap(),
        0.01,
        &Streams::new(29),
    )
    .unwrap();
    let h = mdp.horizon();
    for p in 0..mdp.num_pairs() {
        let fitted: f64 = mdp
            .feature(p)
            .iter()
            .zip(est.omega.iter())
            .map(|(a, b)| a * b)
            .sum();
        assert!((fitted.max(0.0) - exact.values()[p]).abs() <= 0.05 * h * h);
    }
}

#[test]
fn oracle_weighting_regression_baseline() {
    let config = ExperimentConfig {
        num_mdps: 20,
        mdp: MdpParams::default(),
        algorithms: vec![AlgorithmSpec::new("wls_oracle", "wls_oracle", 2000, 100)],
        master_seed: 0,
        eval_every: 100,
        output_path: None,
    };
    let out = run_experiment(&config, &SolverRegistry::with_builtin(), 2).unwrap();
    assert!(out.failures.is_empty());
    let gaps = &final_gaps(&out.records)["wls_oracle"];
    let (mean, _) = mean_stderr(gaps);
    assert!((0.0..=0.05).contains(&mean), "final mean gap {mean}");
    for r in &out.records {
        assert!(r.normalized_gap >= 0.0);
    }
}
