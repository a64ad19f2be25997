#![allow(dead_code)]

use std::collections::BTreeMap;

use contest_core::sim::{prevalence_grid, simulate_dataset};
use contest_core::{Dataset, GroundTruth, SimulationConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid() -> Vec<f64> {
    prevalence_grid(20, 0.03, 0.001).unwrap()
}

/// The classroom answer key.
pub fn classroom_truth() -> GroundTruth {
    truth_with(&[
        (3, -0.9),
        (6, -0.72),
        (10, 0.53),
        (12, -1.26),
        (14, -0.64),
        (16, -0.8),
        (20, -1.13),
    ])
}

pub fn truth_with(effects: &[(usize, f64)]) -> GroundTruth {
    GroundTruth {
        effects: effects.iter().copied().collect::<BTreeMap<_, _>>(),
        confounders: vec![],
        prevalences: grid(),
    }
}

pub fn null_truth() -> GroundTruth {
    truth_with(&[])
}

/// Variable 1 at prevalence 0.5 with log OR 3; the rest null on the sparse grid.
pub fn planted_truth() -> GroundTruth {
    let mut truth = truth_with(&[(1, 3.0)]);
    truth.prevalences[0] = 0.5;
    truth
}

pub fn simulate(truth: &GroundTruth, seed: u64) -> Dataset {
    simulate_dataset(truth, &SimulationConfig::default(), &mut rng(seed)).unwrap()
}

/// One-sample Kolmogorov–Smirnov statistic against Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
