//! Deterministic random substreams.
//!
//! Every random quantity in the crate comes from a ChaCha8 generator whose
//! 256-bit key is expanded with SplitMix64 from a user seed and a path of
//! domain tags and indices. The mapping `(seed, path) -> stream` is a pure
//! function, so results do not depend on thread count or platform.
//! Gaussian variates use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags separating independent uses of one user seed.
pub mod domain {
    pub const OPEN_LOOP_DRAW: u64 = 0x01;
    pub const WEIGHT_SEARCH: u64 = 0x02;
    pub const MAPPING_SEARCH: u64 = 0x03;
    pub const SIMULATION: u64 = 0x04;
    pub const CHANNEL_DRAW: u64 = 0x05;
    pub const STATS_DRAW: u64 = 0x06;
    pub const MULTI_START: u64 = 0x07;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of words into a single derived 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(GOLDEN) ^ acc;
        acc = splitmix64(&mut state);
    }
    acc
}

/// Independent generator for `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = derive_seed(seed, path);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
