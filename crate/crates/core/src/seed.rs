//! Counter-based seed derivation.
//!
//! Every stochastic choice in a run is drawn from a stream named by a short
//! label (`"prep"`, `"haar"`, `"shots"`, ...) and an index. The seed of
//! stream `(label, index)` under root seed `root` is the first eight bytes,
//! read little-endian, of
//!
//! ```text
//! SHA-256( root as u64 LE || label as UTF-8 || 0x00 || index as u64 LE )
//! ```
//!
//! so any single record can be regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// The generator used everywhere a seed turns into randomness.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn stream_rng(root: u64, label: &str, index: u64) -> ChaCha20Rng {
    rng_from_seed(derive_seed(root, label, index))
}
