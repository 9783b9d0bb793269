//! Deterministic random streams.
//!
//! Every Monte Carlo trial gets its own ChaCha stream derived from a master
//! seed by counter splitting: the seed picks the key, the `(domain, index)`
//! pair picks the stream number. Streams never overlap, so trials can run in
//! any order (or in parallel) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream for trial `index` within `domain` under `seed`.
pub fn stream(seed: u64, domain: u32, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 40) ^ index);
    rng
}

/// Fixed domains so that different experiment kinds never share a stream.
pub mod domain {
    pub const QUANTUM: u32 = 1;
    pub const SUCCESSIVE_ELIMINATION: u32 = 2;
    pub const NAIVE: u32 = 3;
    pub const CALIBRATION: u32 = 4;
    pub const INSTANCES: u32 = 5;
    pub const VALIDATION: u32 = 6;
}
