//! Hierarchical seed derivation.
//!
//! Every experiment has one root seed. Children are derived by mixing the
//! parent seed with a child index through SplitMix64, so any node of the tree
//! (trial, purpose, edge) can be regenerated without touching its siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels for the independent purposes inside one trial.
pub mod stream {
    pub const SCORES: u64 = 1;
    pub const GRAPH: u64 = 2;
    pub const COMPARISONS: u64 = 3;
    pub const SAMPLE_P: u64 = 4;
    pub const SAMPLE_PHAT: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub const fn new(root: u64) -> Self {
        Seed(root)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64(splitmix64(self.0) ^ index.wrapping_mul(GOLDEN)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}
