//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator whose seed is
//! derived from a user base seed and a small integer label (diagonal offset,
//! trial index, ...). Derivation runs both words through the SplitMix64
//! finalizer, which is a bijection on `u64`, so distinct labels under one base
//! seed always produce distinct stream seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Domain tags keep the offset and trial derivations from aliasing each other.
pub(crate) const DOMAIN_OFFSET: u64 = 0x6f66_6673_6574_0001;
pub(crate) const DOMAIN_TRIAL: u64 = 0x7472_6961_6c00_0002;
pub(crate) const DOMAIN_BOOTSTRAP: u64 = 0x626f_6f74_0000_0003;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(base ^ domain) + label)`: injective in `label` for a
/// fixed `(base, domain)`.
pub(crate) fn derive(base: u64, domain: u64, label: u64) -> u64 {
    splitmix64(splitmix64(base ^ domain).wrapping_add(label))
}

/// Seed for the `trial`-th independent repetition of an experiment.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    derive(base_seed, DOMAIN_TRIAL, trial)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
