//! Counter-based randomness.
//!
//! Every random quantity is a pure function of a 64-bit key built from
//! `(run_seed, sample_index, realization_index)`, so any worker can
//! reproduce any draw without shared state. The mixer is the SplitMix64
//! finalizer; Gaussians use the cosine branch of Box–Muller on two uniforms
//! derived from the same key.

use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SECOND_UNIFORM: u64 = 0xd1b5_4a32_d192_ed03;
const STATE_DOMAIN: u64 = 0x5354_4154_4553_0001;
const AUDIT_DOMAIN: u64 = 0x4155_4449_5400_0001;

#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for noise realization `realization` of sample `sample`.
#[inline]
pub fn realization_seed(run_seed: u64, sample: u64, realization: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(run_seed) ^ sample) ^ realization)
}

/// Key for coordinate `coordinate` of state sample `sample`.
#[inline]
pub fn state_seed(run_seed: u64, sample: u64, coordinate: u64) -> u64 {
    realization_seed(run_seed ^ STATE_DOMAIN, sample, coordinate)
}

/// Keys used by audits, kept apart from dataset keys.
#[inline]
pub fn audit_seed(run_seed: u64, point: u64, draw: u64) -> u64 {
    realization_seed(run_seed ^ AUDIT_DOMAIN, point, draw)
}

/// Uniform in the open interval `(0, 1)`.
#[inline]
pub fn unit_uniform(key: u64) -> f64 {
    ((splitmix64(key) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn standard_normal(key: u64) -> f64 {
    let u1 = unit_uniform(key);
    let u2 = unit_uniform(key ^ SECOND_UNIFORM);
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}
