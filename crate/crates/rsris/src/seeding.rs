//! Deterministic derivation of per-task random streams.
//!
//! The harness runs many independent cells (covariance realization x channel
//! realization x algorithm variant). Each cell owns a ChaCha stream whose
//! seed is derived from the master seed and the cell coordinates by a
//! SplitMix64 chain, so results do not depend on scheduling or worker count.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// One SplitMix64 step: advances the state and returns the mixed output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label/index path.
///
/// The derivation folds every path element through SplitMix64, so distinct
/// paths yield statistically independent streams and the mapping is stable
/// across platforms.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = master ^ 0x6a09_e667_f3bc_c908;
    let mut out = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0x2545_f491_4f6c_dd1d);
        out ^= splitmix64(&mut state);
    }
    out
}

/// Seeded ChaCha stream for a derived seed.
pub fn rng_from(master: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, path))
}

/// Stable small integers for labelling seed paths.
pub mod labels {
    pub const COVARIANCE: u64 = 1;
    pub const PHASES: u64 = 2;
    pub const MONTE_CARLO: u64 = 3;
    pub const ESTIMATION: u64 = 4;
}
