//! Deterministic random streams.
//!
//! Every source of randomness in the crate is an explicit [`Stream`] derived
//! from a master seed and a route of integer words. The derivation rule is a
//! splitmix64 chain: start from the master word, absorb each route word in
//! order, then expand the final state into a 32-byte ChaCha12 key. Two routes
//! that differ in any word yield statistically independent streams, and the
//! same `(master, route)` pair yields the same stream on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The crate-wide RNG stream type.
pub type Stream = ChaCha12Rng;

/// Route tags keeping the major consumers of randomness on disjoint streams.
pub mod tags {
    /// Response generation within a design row.
    pub const RESPONSE: u64 = 0x01;
    /// Block-maxima generation.
    pub const BLOCKMAX: u64 = 0x02;
    /// Monte Carlo packets for score evaluation.
    pub const SCORE: u64 = 0x03;
    /// Per-(n, replication) experiment cells.
    pub const EXPERIMENT: u64 = 0x04;
    /// Diagnostic checks.
    pub const CHECK: u64 = 0x05;
}

#[inline]
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse `(master, route)` into a single seed word.
pub fn derive_seed(master: u64, route: &[u64]) -> u64 {
    let mut acc = splitmix64(master ^ 0x6A09_E667_F3BC_C908);
    for &word in route {
        acc = splitmix64(acc ^ splitmix64(word ^ 0xBB67_AE85_84CA_A73B));
    }
    acc
}

/// Build the stream addressed by `(master, route)`.
pub fn stream(master: u64, route: &[u64]) -> Stream {
    let mut state = derive_seed(master, route);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Uniform draw in the open interval `(0, 1)`.
///
/// Inverse-CDF samplers feed on these, so a draw can never land exactly on a
/// support endpoint.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand::distr::Open01)
}
