//! Hash commitment to a hidden truth: `SHA-256(canonical truth ‖ salt)`.
//!
//! The digest is published before submissions are collected; the truth file
//! (which carries the salt) is revealed afterwards and checked against it.

use contest_core::GroundTruth;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::formats::{canonical_truth, SealedTruth};

/// Salt derived from the simulation seed on a stream the simulation never uses.
pub fn derive_salt(seed: u64) -> [u8; 16] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut salt = [0u8; 16];
    rng.fill_bytes(&mut salt);
    salt
}

pub fn seal(truth: GroundTruth, seed: u64) -> SealedTruth {
    SealedTruth {
        truth,
        seed,
        salt: derive_salt(seed),
    }
}

/// Lower-case hex SHA-256 digest.
pub fn commitment(sealed: &SealedTruth) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_truth(&sealed.truth, sealed.seed).as_bytes());
    hasher.update(sealed.salt);
    hex::encode(hasher.finalize())
}

pub fn verify(sealed: &SealedTruth, digest: &str) -> bool {
    commitment(sealed) == digest.trim().to_ascii_lowercase()
}
