//! Deterministic RNG streams derived from a master seed.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of stream tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(master), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn stream(master: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tags))
}

/// Fills `u` with sorted uniforms from normalised exponential spacings,
/// which has the same law as sorting `N` independent uniforms.
pub fn sorted_uniforms<R: Rng + ?Sized>(rng: &mut R, u: &mut [f64]) {
    let mut acc = 0.0;
    for v in u.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        acc += e;
        *v = acc;
    }
    let e: f64 = Exp1.sample(rng);
    let total = acc + e;
    for v in u.iter_mut() {
        *v /= total;
    }
}
