//! Seeded random streams. One master seed per run yields independent
//! substreams, so turning one randomness source off leaves the others'
//! sequences untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Substream {
    Shadowing = 1,
    PacketErrors = 2,
}

pub fn stream(seed: u64, which: Substream) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct RunStreams {
    pub shadowing: Stream,
    pub packet_errors: Stream,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            shadowing: stream(seed, Substream::Shadowing),
            packet_errors: stream(seed, Substream::PacketErrors),
        }
    }
}
