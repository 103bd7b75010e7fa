//! Counter-based seeding: a master seed spawns an independent ChaCha stream
//! for every `(replicate, component)` pair, so results never depend on the
//! order in which replicates are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeeder {
    master: u64,
}

impl StreamSeeder {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, replicate: u64, component: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.master ^ splitmix64(replicate)));
        rng.set_stream(component);
        rng
    }
}

/// Replicate key for ladder step `step`, replicate `rep`.
pub fn replicate_key(step: usize, rep: usize) -> u64 {
    ((step as u64) << 32) | rep as u64
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
