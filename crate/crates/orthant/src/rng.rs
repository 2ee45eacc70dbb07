//! Counter-based deterministic random streams.
//!
//! A [`RandomStream`] is a `(seed, stream_id)` pair mapped onto a ChaCha12
//! generator: the seed keys the cipher and the stream id selects one of
//! 2^64 independent streams. Identical pairs reproduce identical draws
//! bit for bit; derived streams are obtained by hashing the parent stream id
//! with a salt (path index, batch tag), so results do not depend on
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// splitmix64 finalizer; the standard 64-bit mixing function.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    /// Root stream of a run.
    pub fn root(seed: u64) -> Self {
        RandomStream { seed, stream_id: 0 }
    }

    /// Child stream for item `index` under tag `tag` (e.g. path index within
    /// a batch). Same parent, tag and index always give the same child.
    pub fn derive(&self, tag: u64, index: u64) -> Self {
        let h = mix64(self.stream_id ^ mix64(tag ^ mix64(index)));
        RandomStream {
            seed: self.seed,
            stream_id: h,
        }
    }

    /// Materialize the generator.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
