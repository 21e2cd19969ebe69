//! Seed derivation.
//!
//! Every random stream is a ChaCha20 generator keyed by the user seed
//! (expanded with `SeedableRng::seed_from_u64`) and placed on its own
//! 64-bit stream id. Stream 0 belongs to the clean run; noisy trial `t`
//! uses stream `t + 1`. Streams never overlap, so trials are independent
//! and results do not depend on scheduling or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Stream reserved for the clean (noise-free) run.
pub const CLEAN_STREAM: u64 = 0;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn trial_stream(trial: usize) -> u64 {
    trial as u64 + 1
}

/// Seed handed to a trainer on the given stream.
pub fn trainer_seed(seed: u64, stream: u64) -> u64 {
    // word position 2^32 keeps trainer seeds clear of the label-noise words
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos(1u128 << 32);
    rng.next_u64()
}
