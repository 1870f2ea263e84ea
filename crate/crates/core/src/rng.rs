//! Seeded random streams.
//!
//! Every generator in the crate is a ChaCha8 stream keyed by a 64-bit seed and
//! selected by a purpose tag, so the model, the noise, the mask and the solver
//! initialization of a trial draw from disjoint streams of one seed.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Model = 1,
    Noise = 2,
    Mask = 3,
    Init = 4,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in grid cell `cell` under `master`.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    mix64(mix64(mix64(master) ^ cell) ^ trial.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Complex value whose real and imaginary parts are independent `N(0, 1)` draws.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}
