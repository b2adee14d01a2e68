//! Counter-based Gaussian streams.
//!
//! A stream is keyed by `(seed, stream)` and addressed by a draw index: draw `k`
//! of length `len` starts at ChaCha8 word position `k * 4 * ceil(len / 2)` and
//! turns consecutive `u64` pairs into normal pairs with the Box-Muller transform
//! `r = sqrt(-2 ln u1)`, `(r cos 2 pi u2, r sin 2 pi u2)`. Every draw is therefore
//! a pure function of `(seed, stream, draw, len)`, independent of what other
//! draws were made and in which order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const U64_TO_UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// Folds a sequence of words into one 64-bit seed (splitmix64 finalizer per word).
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6a09_e667_f3bc_c909_u64, |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 32-bit ChaCha words consumed by one draw of `len` normals.
pub fn words_per_draw(len: usize) -> u128 {
    4 * len.div_ceil(2) as u128
}

/// Fills `out` with draw number `draw` of the standard-normal stream `(seed, stream)`.
pub fn fill_standard_normals(seed: u64, stream: u64, draw: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(draw) * words_per_draw(out.len()));
    for pair in out.chunks_mut(2) {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = 1.0 - (rng.next_u64() >> 11) as f64 * U64_TO_UNIT;
        let u2 = (rng.next_u64() >> 11) as f64 * U64_TO_UNIT;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        pair[0] = r * c;
        if let Some(second) = pair.get_mut(1) {
            *second = r * s;
        }
    }
}

/// Fills `out` with draw number `draw` of the uniform `(0, 1)` stream `(seed, stream)`,
/// one `u64` per value, `(x >> 11) + 1/2` scaled by `2^-53`.
pub fn fill_uniforms(seed: u64, stream: u64, draw: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(draw) * 2 * out.len() as u128);
    for v in out.iter_mut() {
        *v = ((rng.next_u64() >> 11) as f64 + 0.5) * U64_TO_UNIT;
    }
}
