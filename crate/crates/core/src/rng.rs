//! Deterministic RNG streams.
//!
//! All randomness in the crate flows through [`derive_rng`]: a master seed
//! plus a path of indices (bin number, restart number, worker index, ...)
//! yields an independent stream. Workers that run in parallel each get their
//! own path, so results do not depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used only to mix path elements into a seed.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a reproducible RNG from a master seed and a path of stream indices.
///
/// Identical `(seed, path)` always produce identical streams; distinct paths
/// produce statistically independent streams.
pub fn derive_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x1f83_d9ab_fb41_bd6b)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(state);
    rng.set_stream(splitmix64(state ^ 0x510e_527f_ade6_82d1));
    rng
}
