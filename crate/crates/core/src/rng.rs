//! Seeded random streams.
//!
//! Every random quantity in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded with `seed_from_u64(seed)` and then switched to a fixed 64-bit stream id.
//! Distinct streams of the same seed are independent keystreams, so the weight
//! initializer and the batch shuffler of one run never share draws, and two runs
//! differ only through their seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng;

/// Stream ids. Changing any of these changes every trajectory the crate produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    XorTrain = 3,
    XorTest = 4,
    Split = 5,
    Folds = 6,
}

pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
