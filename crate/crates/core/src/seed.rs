//! Deterministic seed derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! seed is derived from the experiment seed and a path of labels
//! (replicate, column, ...). Two different paths never share a stream, so
//! replicates can run on any thread in any order and still reproduce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a label path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(seed), |acc, &label| splitmix(acc ^ splitmix(label.wrapping_add(GOLDEN))))
}

/// A generator for `seed` refined by `path`.
pub fn rng(seed: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, path))
}

/// Stream labels. Keeping them in one place avoids accidental reuse.
pub(crate) mod label {
    pub const COLUMN: u64 = 1;
    pub const ROW_LENGTHS: u64 = 2;
    pub const PERSONALIZATION: u64 = 3;
    pub const DOMINATING_COUNT: u64 = 4;
    pub const REPLICATE: u64 = 6;
    pub const GRAPH: u64 = 7;
    pub const BOOTSTRAP: u64 = 8;
    pub const BASELINE: u64 = 9;
    pub const LEVEL: u64 = 10;
}
