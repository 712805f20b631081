//! Seed discipline. Every random draw in the crate comes from a stream
//! derived from the run's master seed, a module tag, and an index, so runs
//! are reproducible and instances can be processed in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunSeed(pub u64);

impl RunSeed {
    pub fn new(master_seed: u64) -> Self {
        RunSeed(master_seed)
    }

    pub fn master(&self) -> u64 {
        self.0
    }

    /// Independent stream for `(tag, index)`. The 256-bit key is the SHA-256
    /// of the length-prefixed components, so distinct inputs give distinct
    /// streams unless SHA-256 collides.
    pub fn derive_stream(&self, tag: &str, index: u64) -> StreamRng {
        let mut hasher = Sha256::new();
        hasher.update(b"blamebench/stream/v1");
        hasher.update(self.0.to_le_bytes());
        hasher.update((tag.len() as u64).to_le_bytes());
        hasher.update(tag.as_bytes());
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        StreamRng::from_seed(key)
    }

    /// Child seed for a sub-run, e.g. the `k`-th reinitialization trial.
    pub fn child(&self, tag: &str, index: u64) -> RunSeed {
        use rand::RngCore;
        RunSeed(self.derive_stream(tag, index).next_u64())
    }
}

pub fn derive_stream(seed: RunSeed, tag: &str, index: u64) -> StreamRng {
    seed.derive_stream(tag, index)
}
