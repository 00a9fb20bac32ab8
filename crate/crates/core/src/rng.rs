//! Named, independent random streams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A stream identifier; each feature draws from its own stream so toggling
/// one feature never shifts another's draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Batching = 2,
    Sampling = 3,
    Clustering = 4,
    Reorder = 5,
    Analysis = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Resumes a stream at a recorded word position.
pub fn stream_at(seed: u64, which: Stream, word_pos: u128) -> ChaCha8Rng {
    let mut rng = stream(seed, which);
    rng.set_word_pos(word_pos);
    rng
}
