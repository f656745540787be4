//! Keyed random streams.
//!
//! Every random draw in the solvers comes from a stream addressed by
//! `(master seed, purpose path, iteration, pair index)`; the sample index is
//! the position inside that stream. Two runs that address the same stream see
//! the same numbers regardless of scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one; not symmetric in its arguments.
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b).rotate_left(17))
}

/// Purpose tags used by the solvers. Distinct tags never share streams.
pub mod tag {
    pub const HARD_MDP: u64 = 0x4844_4d50;
    pub const TABULAR: u64 = 0x5441_4231;
    pub const WLS_PHASE_ONE: u64 = 0x574c_5331;
    pub const WLS_PHASE_THREE: u64 = 0x574c_5333;
    pub const WLS: u64 = 0x574c_5330;
    pub const VARIANCE_Y: u64 = 0x5641_5259;
    pub const VARIANCE_Z: u64 = 0x5641_525a;
    pub const SOLVER: u64 = 0x534f_4c56;
    pub const MDP_SEED: u64 = 0x4d44_5053;
}

/// A node in the stream tree: a master seed plus a path of purpose tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    master: u64,
    path: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            path: mix64(master),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Descends into a sub-tree identified by `tag`.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            master: self.master,
            path: combine(self.path, tag),
        }
    }

    /// The generator for `(iteration, pair)` under this node.
    pub fn stream(&self, iteration: u64, pair: u64) -> ChaCha8Rng {
        let a = combine(self.path, iteration);
        let b = combine(a, pair);
        let mut seed = [0u8; 32];
        let words = [
            mix64(b),
            mix64(b ^ 0x1),
            mix64(b ^ 0x2),
            mix64(combine(self.master, b)),
        ];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
