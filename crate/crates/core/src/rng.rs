//! Seeded random streams. Every random draw in the crate comes from a
//! ChaCha stream keyed by `(seed, stream id)`, so results never depend on
//! scheduling or on how many other draws happened elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const PARTITION_STREAM: u64 = 1;
pub(crate) const SYNTH_STREAM: u64 = 2;
pub(crate) const SYNTH_PROJECTION_STREAM: u64 = 1 << 20;
pub(crate) const SYNTH_NOISE_STREAM: u64 = 2 << 20;
pub(crate) const PREDICTIVE_STREAM: u64 = 1 << 32;

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
