//! Reproducible random streams keyed by `(seed, rank, phase, ...)` tuples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SbpRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent generator from a master seed and a key path.
/// Distinct key paths give unrelated streams; the same path always gives the
/// same stream.
pub fn stream(seed: u64, key: &[u64]) -> SbpRng {
    let mut state = splitmix64(seed);
    for &k in key {
        state = splitmix64(state ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        state = splitmix64(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
