//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by the run seed plus a small tuple of
//! integers (stream tag, epoch, sample id, ...), so results never depend on
//! the order in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const STREAM_SHUFFLE: u64 = 1;
pub const STREAM_AUGMENT: u64 = 2;
pub const STREAM_INIT: u64 = 3;
pub const STREAM_DATA_TRAIN: u64 = 4;
pub const STREAM_DATA_TEST: u64 = 5;
pub const STREAM_TRACE: u64 = 6;
pub const STREAM_AUGMENT_ALL: u64 = 7;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base`; distinct tuples give unrelated seeds.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(base: u64, parts: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}

/// Uniform draw on `[lo, hi]`; a degenerate range returns `lo` without
/// consuming less entropy than a proper one.
pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rand::Rng::gen(rng);
    lo + (hi - lo) * u
}
