//! Seed derivation. Every random stream in a run is a `ChaCha8Rng` seeded
//! from the master seed and a stream path, so runs are reproducible and
//! streams do not depend on the order in which they are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a stream path into a parent seed.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(parent), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn rng_from(parent: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, path))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Named stream labels, kept in one place so no two subsystems share a stream.
pub mod stream {
    pub const PREDICTOR: u64 = 1;
    pub const OBSTACLE: u64 = 2;
    pub const SCENARIO_JITTER: u64 = 3;
    pub const TRACE: u64 = 4;
    pub const INIT: u64 = 5;
    pub const BOUNDS: u64 = 6;
}
