//! Counter-based random streams.
//!
//! Every draw in a run gets its own ChaCha8 stream addressed by
//! `(seed, stream id)`, and the ChaCha block counter advances within it.
//! The output for a given `(seed, phase, draw)` therefore does not depend
//! on which worker evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type SampleRng = ChaCha8Rng;

/// Stream for draw `index` of phase `phase` under run seed `seed`.
pub fn draw_stream(seed: u64, phase: u32, index: u32) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((phase as u64) << 32) | index as u64);
    rng
}

/// A single long stream, for callers that only need one sequence.
pub fn single_stream(seed: u64) -> SampleRng {
    draw_stream(seed, u32::MAX, u32::MAX)
}
