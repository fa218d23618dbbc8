//! Seed derivation for every random stream in the crate.
//!
//! Each stream is a ChaCha12 generator keyed by SHA-256 over the master seed,
//! a purpose tag and a list of indices. Streams for different fragments,
//! times or samples are therefore independent of one another and of the order
//! in which worker threads happen to request them.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Version prefix mixed into every derived key. Bump it if the derivation
/// changes, since every stored dataset depends on it.
const DOMAIN: &[u8] = b"qdarwin/rng/v1";

/// Purpose tags. Keep these stable.
pub mod tag {
    pub const COUPLINGS_D: &str = "couplings.d";
    pub const COUPLINGS_M: &str = "couplings.m";
    pub const FRAGMENTS: &str = "fragments";
    pub const TIME_AVERAGE: &str = "time-average";
    pub const HAAR: &str = "haar";
    pub const LATE_TIMES: &str = "late-times";
}

pub type StreamRng = ChaCha12Rng;

/// Derive the generator for `(seed, tag, indices)`.
pub fn stream(seed: u64, tag: &str, indices: &[u64]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}
