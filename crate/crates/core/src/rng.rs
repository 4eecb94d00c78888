//! Seeded, splittable random streams.
//!
//! Every stochastic quantity in a run is drawn from a ChaCha8 stream derived
//! from `(seed, lane, index)`. The index is a work-unit number (a round chunk,
//! an experiment), never a thread id, so results are identical whether the
//! units are processed sequentially or fanned out across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent purposes that may need a stream for the same work unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Photons = 0,
    Responses = 1,
    Challenges = 2,
    Experiments = 3,
}

/// Returns the substream for work unit `index` on `lane`.
pub fn substream(seed: u64, lane: Lane, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Upper bits carry the lane so unit indices never collide across lanes.
    rng.set_stream(((lane as u64) << 56) ^ index);
    rng
}
