//! Seeded randomness. All randomness flows from one master seed through
//! named sub-streams so adding a consumer never perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// Parameter initialization.
    Init,
    /// Per-epoch batch shuffling.
    Shuffle,
    /// Synthetic data generation.
    Synthetic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Shuffle => 2,
            Stream::Synthetic => 3,
        }
    }
}

/// Deterministic, platform-independent RNG for the given seed and stream.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
