//! Deterministic per-task random number streams.
//!
//! Every parallel unit of work (one particle at one iteration of one stage)
//! draws from its own generator, seeded from a hash of the run seed and a tag
//! path. Results therefore do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Factory for independent generators keyed by `(seed, tags...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child factory whose streams are disjoint from the parent's other children.
    pub fn fork(&self, tag: u64) -> Self {
        Self {
            seed: self.key(&[tag]),
        }
    }

    fn key(&self, tags: &[u64]) -> u64 {
        let mut h = splitmix64(self.seed);
        for &t in tags {
            h = splitmix64(h ^ splitmix64(t.wrapping_add(0xA5A5_A5A5)));
        }
        h
    }

    pub fn rng(&self, tags: &[u64]) -> StreamRng {
        StreamRng::seed_from_u64(self.key(tags))
    }
}

/// Stage tags used when deriving streams.
pub mod stage {
    pub const INIT: u64 = 1;
    pub const RESAMPLE: u64 = 2;
    pub const MUTATE: u64 = 3;
    pub const PERTURB: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const TRANSITION: u64 = 6;
    pub const OBSERVE: u64 = 7;
    pub const PREDICT: u64 = 8;
}
