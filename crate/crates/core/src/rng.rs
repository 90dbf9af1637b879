//! Seed derivation for independent, reproducible random streams.
//!
//! Every stream in a study is addressed by a master seed plus a path of
//! integer tags (replication index, probe role, cell index...). Two
//! different paths give statistically independent ChaCha8 streams; the
//! same path always gives the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Tag for the shared arrival-epoch stream of a replication.
pub const TAG_ARRIVALS: u64 = 0xA11;
/// Tag for a system's private stream (server choice and service draws).
pub const TAG_SYSTEM: u64 = 0x515;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a master seed and a tag path into a child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// An RNG stream for `path` under `seed`.
pub fn child(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
