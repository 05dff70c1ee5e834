//! Deterministic random substreams.
//!
//! Every random draw in a run is addressed by a path of integers, e.g.
//! `(seed, grid point, trial, user)`. The path is folded through SplitMix64
//! into a 64-bit seed for a fresh ChaCha8 generator, so results do not depend
//! on the order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Domain tags separating unrelated uses of the same seed.
pub mod tag {
    pub const CANDIDATE_SCORES: u64 = 0x11;
    pub const RELEVANCE: u64 = 0x12;
    pub const CANDIDATE_SETS: u64 = 0x13;
    pub const SELECTION: u64 = 0x14;
    pub const RANKING: u64 = 0x21;
    pub const TOY: u64 = 0x31;
    pub const TRAINING: u64 = 0x41;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a path of integers into one seed.
pub fn derive_seed(path: &[u64]) -> u64 {
    path.iter().fold(0x005E_ED0F_E0B0_5100_u64, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Fresh generator for the given path.
pub fn stream(path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(path))
}
