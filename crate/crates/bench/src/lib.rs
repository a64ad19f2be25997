//! Fixtures shared by the benchmarks.

use contest_core::sim::{draw_ground_truth, simulate_dataset};
use contest_core::{Dataset, GroundTruth, SimulationConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A default-sized contest dataset drawn from `seed`.
pub fn contest_dataset(seed: u64) -> (GroundTruth, Dataset) {
    let config = SimulationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = draw_ground_truth(&config, &mut rng).expect("default config is valid");
    let data = simulate_dataset(&truth, &config, &mut rng).expect("default config fits the budget");
    (truth, data)
}
