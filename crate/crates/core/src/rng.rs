//! Seed derivation and Gaussian sampling.
//!
//! Every random quantity in the crate is drawn from a `ChaCha8Rng` whose seed
//! is derived from a base seed and a list of integer coordinates. Streams never
//! share state, so results do not depend on scheduling order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StdRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a base seed and coordinates.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |h, &c| splitmix64(h ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng_from_seed(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard Gaussian vector; complex entries get independent real and
/// imaginary parts.
pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, complex: bool) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let re = gaussian(rng);
            let im = if complex { gaussian(rng) } else { 0.0 };
            Complex64::new(re, im)
        })
        .collect()
}
