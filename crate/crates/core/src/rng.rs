//! Seed derivation and Gaussian draws.
//!
//! Every random stream in a run is keyed by a path of integers below the
//! master seed (class, trajectory, timestep, ...). Streams never share state,
//! so adding trajectories or classes leaves existing streams untouched.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

/// Stream tags for [`derive_seed`] paths.
pub mod stream {
    pub const DATA_TRAIN: u64 = 1;
    pub const DATA_TEST: u64 = 2;
    pub const CORESET: u64 = 3;
    pub const TRAJECTORY: u64 = 4;
    pub const BASELINE: u64 = 5;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `master` together with an ordered key path into a new seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(splitmix64(master), |h, (i, &k)| {
        splitmix64(h ^ splitmix64(k.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN))))
    })
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Array1<f64> {
    Array1::from_shape_fn(dim, |_| rng.sample(StandardNormal))
}
