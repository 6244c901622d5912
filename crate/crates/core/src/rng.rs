//! Seeded random streams.
//!
//! Every consumer of randomness derives its own generator from a master seed
//! and a stream index, so results never depend on evaluation order or thread
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Fallback master seed when none is given.
pub const DEFAULT_SEED: u64 = 1;

// Stream tags keep unrelated consumers of one master seed apart.
pub(crate) const TAG_SIM: u64 = 0x5349_4d00_0000_0000;
pub(crate) const TAG_DECON: u64 = 0x4445_434f_0000_0000;
pub(crate) const TAG_WINDOW: u64 = 0x5749_4e44_0000_0000;
pub(crate) const TAG_ARTIFICIAL: u64 = 0x4152_5449_0000_0000;
pub(crate) const TAG_GAUSSIAN: u64 = 0x4741_5553_0000_0000;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream index into an independent seed.
#[inline]
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(stream.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn stream_rng(master: u64, stream: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, stream))
}

/// `n` i.i.d. standard normal draws, reproducible per seed.
pub fn gaussian_stream(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, TAG_GAUSSIAN);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}
