//! Seed derivation. Every random stream in a run is a ChaCha8 generator keyed
//! by a 64-bit seed mixed from the run seed and a stream tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `base ^ golden·(stream+1)`.
pub fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags for the independent random streams inside one run.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const NEGATIVES: u64 = 3;
    pub const AUGMENT: u64 = 4;
    pub const SELECTION: u64 = 5;
    pub const POOL: u64 = 6;
}
