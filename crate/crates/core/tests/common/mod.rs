#![allow(dead_code)]

use casepath_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian design and a linear signal plus noise.
pub fn gaussian(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let beta: Vec<f64> = (0..=p).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| {
            let e: f64 = rng.sample(StandardNormal);
            beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>() + e
        })
        .collect();
    Dataset::from_rows(&rows, &y).unwrap()
}

/// Random small instance `(data, tau, lambda)` with a unique leave-one-out problem.
pub fn small_instance(seed: u64) -> (Dataset, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let taus = [0.1, 0.3, 0.5, 0.9];
    let lambdas = [0.05, 1.0, 20.0];
    let tau = taus[rng.random_range(0..taus.len())];
    let lambda = lambdas[rng.random_range(0..lambdas.len())];
    let n = loop {
        let n: usize = rng.random_range(8..=30);
        if !is_integer((n - 1) as f64 * tau) {
            break n;
        }
    };
    let p = rng.random_range(1..=10);
    (gaussian(n, p, seed), tau, lambda)
}

pub fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-9
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Five-point fixture with frozen held-out fits at `τ = 0.3`, `λ = 1`.
pub fn five_point() -> (Dataset, Vec<f64>) {
    let text = include_str!("../fixtures/five_point.csv");
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut loo = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line.split(',').map(|c| c.trim().parse().unwrap()).collect();
        rows.push(vec![v[0]]);
        y.push(v[1]);
        loo.push(v[2]);
    }
    (Dataset::from_rows(&rows, &y).unwrap(), loo)
}

pub const FIVE_TAU: f64 = 0.3;
pub const FIVE_LAMBDA: f64 = 1.0;
/// Full-data `(β₀, β)` of the five-point fixture.
pub const FIVE_FULL: (f64, f64) = (1.1789473684210527, 0.368421052631579);

/// Certificate relative to the response scale.
pub fn scaled_kkt(sol: &casepath_core::QuantileSolution, data: &Dataset, tau: f64, lambda: f64) -> f64 {
    let cfg = casepath_core::FitConfig::new(tau, lambda).unwrap();
    casepath_core::kkt_residual(sol, data, &cfg).unwrap() / data.scale()
}
