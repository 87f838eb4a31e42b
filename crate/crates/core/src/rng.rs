//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed
//! by a 64-bit seed and selected by a 64-bit stream index. The value drawn
//! for `(seed, index)` never depends on what else was drawn before, so lazy
//! environments and parallel replicas are reproducible in any order and on
//! any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams used for different purposes apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Environment = 1,
    Walk = 2,
    Replica = 3,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, purpose, index)`.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ (purpose as u64).wrapping_mul(GOLDEN)) ^ index)
}

/// Expand a 64-bit seed into a ChaCha key.
pub fn key(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = seed;
    for chunk in out.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

/// The stream `index` under `key`.
pub fn stream_from_key(key: [u8; 32], index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    stream_from_key(key(seed), index)
}
