//! Seeded, stream-splittable randomness.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A deterministic random source identified by a `(seed, stream)` pair.
///
/// Identical pairs yield identical draw sequences; distinct stream ids yield
/// statistically independent streams of the same seed. Streams are the unit
/// of parallelism: every concurrent task (e.g. a Monte Carlo trial) owns its
/// own stream and never shares it.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
