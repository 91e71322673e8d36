//! Splittable seed streams.
//!
//! A [`SeedStream`] is a 64-bit key. Children are derived by mixing the
//! parent key with a tag path, so any `(root, episode, slot, purpose)` tuple
//! maps to the same generator no matter which order or thread asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream(u64);

/// Well-known purpose tags.
pub mod purpose {
    pub const CATALOG: u64 = 0x10;
    pub const TOPOLOGY: u64 = 0x11;
    pub const TASKS: u64 = 0x12;
    pub const CHANNEL: u64 = 0x13;
    pub const ENV: u64 = 0x14;
    pub const DECISION: u64 = 0x20;
    pub const CACHE: u64 = 0x21;
    pub const OFFRA: u64 = 0x22;
    pub const AGENT_INIT: u64 = 0x30;
    pub const AGENT_NOISE: u64 = 0x31;
    pub const AGENT_REPLAY: u64 = 0x32;
    pub const TRAIN: u64 = 0x40;
    pub const EVAL: u64 = 0x41;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        Self(splitmix64(root))
    }

    pub fn key(self) -> u64 {
        self.0
    }

    pub fn child(self, tag: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn derive(self, path: &[u64]) -> Self {
        path.iter().fold(self, |s, &t| s.child(t))
    }

    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }
}
