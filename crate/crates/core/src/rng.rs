//! Deterministic random streams keyed by `(master seed, domain, index)`.
//!
//! Every trajectory or probe sample draws from its own ChaCha stream, so
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains keep unrelated consumers of the same master seed apart.
pub mod domain {
    pub const TRAJECTORY: u64 = 1;
    pub const LYAPUNOV: u64 = 2;
    pub const MOMENTS: u64 = 3;
    pub const AUDIT: u64 = 4;
    pub const SIGMA2: u64 = 5;
    pub const TRANSVERSE: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `index` of the keyed generator for `(seed, domain)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Sub-key for two-level indexing (e.g. grid state, then sample).
pub fn subkey(seed: u64, outer: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(outer.wrapping_add(0x5851_f42d_4c95_7f2d))))
}
