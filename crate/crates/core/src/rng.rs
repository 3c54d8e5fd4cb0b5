//! Counter-derived random substreams.
//!
//! Every random draw in the crate comes from a ChaCha stream addressed by
//! `(seed, stage, index)`, so parallel maps stay bit-reproducible no matter
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

/// Stream index reserved for sequential per-stage work (resampling).
pub const SEQUENTIAL: u32 = u32::MAX;

pub fn substream(seed: u64, stage: u32, index: u32) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 32) | index as u64);
    rng
}
