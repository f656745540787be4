#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vwls_mdvi::linear_mdp::LinearMdp;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-6f64..1.0).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Random linear MDP whose features lie on the simplex and whose `mu` rows
/// are distributions, so `P = phi^T mu` is a valid kernel.
pub fn random_linear_mdp(seed: u64, x: usize, a: usize, d: usize, gamma: f64) -> LinearMdp {
    let mut r = rng(seed);
    let phi: Vec<f64> = (0..x * a).flat_map(|_| simplex(&mut r, d)).collect();
    let mu: Vec<f64> = (0..d).flat_map(|_| simplex(&mut r, x)).collect();
    let psi: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
    LinearMdp::from_features(x, a, d, gamma, phi, mu, psi).expect("random linear MDP")
}

/// Random tabular MDP with dense transitions.
pub fn random_tabular_mdp(seed: u64, x: usize, a: usize, gamma: f64) -> LinearMdp {
    let mut r = rng(seed);
    let rewards: Vec<f64> = (0..x * a).map(|_| r.gen_range(-1.0..1.0)).collect();
    let transitions: Vec<f64> = (0..x * a).flat_map(|_| simplex(&mut r, x)).collect();
    LinearMdp::from_tables(x, a, gamma, rewards, transitions, None).expect("random tabular MDP")
}

pub fn report(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
