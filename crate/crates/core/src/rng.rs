//! Deterministic random-stream derivation.
//!
//! Every independent unit of work (a trial/repeat cell, an optimizer
//! evaluation, a replication of an experiment) owns its own generator,
//! seeded by mixing the master seed with the unit's indices. Results are
//! therefore bit-identical regardless of execution order or thread count.

use rand::SeedableRng;

/// The generator used throughout: small state, fast seeding, good quality.
pub type Stream = rand_pcg::Pcg64Mcg;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Stable across platforms and releases; changing it
/// would invalidate every recorded seed.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse (master, a, b) into a single stream seed.
#[inline]
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut h = mix(master ^ GOLDEN);
    h = mix(h ^ a.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
    mix(h ^ b.wrapping_mul(GOLDEN))
}

/// Stream for estimation cell (trial, repeat).
#[inline]
pub fn cell_stream(master: u64, trial: u64, repeat: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, trial, repeat))
}

/// Stream for a standalone unit (dataset index, optimizer evaluation, ...).
#[inline]
pub fn unit_stream(master: u64, unit: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, unit, 0))
}
