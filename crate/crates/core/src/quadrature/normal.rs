//! Reproducible standard-normal deviates.
//!
//! Generator: ChaCha20 keyed by `ChaCha20Rng::seed_from_u64(seed)` with the
//! stream id set to `tag`. Each 64-bit output `x` becomes the uniform
//! `u = ((x >> 11) + 0.5)·2⁻⁵³ ∈ (0, 1)`, and the deviate is the inverse
//! normal CDF `z = −√2·erfc⁻¹(2u)`. ChaCha is counter based, so any other
//! implementation of the same three steps reproduces the stream exactly.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Inverse standard-normal CDF.
pub fn uniform_to_normal(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// `count` deviates of stream 0 for `seed`.
pub fn seeded_normal_stream(seed: u64, count: usize) -> Vec<f64> {
    tagged_normal_stream(seed, 0, count)
}

/// `count` deviates of the stream `(seed, tag)`.
pub fn tagged_normal_stream(seed: u64, tag: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    (0..count)
        .map(|_| {
            let u = ((rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53;
            uniform_to_normal(u)
        })
        .collect()
}
