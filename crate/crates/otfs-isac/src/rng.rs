//! Deterministic seed derivation for Monte Carlo trials.
//!
//! Every trial of every sweep point gets its own RNG stream derived from
//! `(master_seed, sweep index, trial index)` by a splitmix-style mixer, so
//! results do not depend on execution order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period bijection on u64.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the seed for one `(sweep point, trial)` work unit.
pub fn derive_seed(master: u64, sweep_index: u64, trial: u64) -> u64 {
    mix64(master ^ mix64(sweep_index.wrapping_add(0x5bf0_3635)) ^ mix64(trial.rotate_left(17) | 1))
}

/// RNG stream for a derived seed. ChaCha keeps the stream identical across
/// platforms and library versions.
pub fn trial_rng(master: u64, sweep_index: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, sweep_index, trial))
}
