//! Seeded random substreams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived
//! from the run seed, so that changing how one consumer uses randomness
//! (or which power-control scheme runs) never shifts another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Layout,
    DownlinkArrivals { cell: usize },
    UplinkArrivals { cell: usize },
    UeAssignment { cell: usize },
}

impl Stream {
    fn id(self) -> u64 {
        let (tag, cell) = match self {
            Stream::Layout => (1u64, 0usize),
            Stream::DownlinkArrivals { cell } => (2, cell),
            Stream::UplinkArrivals { cell } => (3, cell),
            Stream::UeAssignment { cell } => (4, cell),
        };
        (tag << 48) | cell as u64
    }
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
