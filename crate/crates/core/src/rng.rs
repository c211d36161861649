//! Deterministic random streams.
//!
//! Every stochastic draw takes a ChaCha8 stream derived from the master seed,
//! a purpose tag and an index (typically the realization number), so results
//! never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps unrelated draws independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Multipath = 1,
    PhaseError = 2,
    Misalignment = 3,
    Fading = 4,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer.
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let key = mix(seed ^ mix(purpose as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Stream for item `inner` of realization `outer`.
pub fn substream(seed: u64, purpose: Purpose, outer: u64, inner: u64) -> ChaCha8Rng {
    stream(mix(seed ^ outer.wrapping_mul(0x9e37_79b9_7f4a_7c15)), purpose, inner)
}
