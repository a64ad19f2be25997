use rand::Rng;

/// `n` row indices (0-based) drawn uniformly with replacement.
pub fn bootstrap_resample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}
