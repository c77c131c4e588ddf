//! Deterministic, substreamed random number generation.
//!
//! A [`SeededRng`] is only a master seed. Work item `i` draws from
//! `stream(i)`, a ChaCha8 generator keyed by the master seed with stream id `i`,
//! so results never depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    master_seed: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed
    }

    /// Independent generator for work item `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// A child seed for a named purpose (replicate, iteration, ...).
    pub fn derive(&self, tag: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
