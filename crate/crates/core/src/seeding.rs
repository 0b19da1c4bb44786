//! Labelled random streams split from one master seed.
//!
//! Each consumer (instance draws, embeddings, initial designs, acquisition
//! restarts, ...) owns its own ChaCha stream, so adding draws to one of them
//! never shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Well-known stream labels.
pub mod labels {
    pub const RANDOMIZATION: &str = "rml/randomization";
    pub const EMBEDDING: &str = "hdbo/embedding";
    pub const INITIAL_DESIGN: &str = "hdbo/initial-design";
    pub const ACQUISITION: &str = "hdbo/acquisition";
    pub const GP_FIT: &str = "hdbo/gp-fit";
    pub const RANDOM_DESIGN: &str = "baseline/random-design";
    pub const LOCAL_SEARCH: &str = "baseline/local-search";
    pub const PROBLEM: &str = "bench/problem";
    pub const LANDSCAPE: &str = "bench/landscape";
    pub const TRIAL: &str = "bench/trial";
}

fn fnv1a(label: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed, e.g. one per trial.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(label) ^ splitmix64(index)))
}

/// Independent generator for `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(fnv1a(label) ^ splitmix64(index)));
    rng
}
