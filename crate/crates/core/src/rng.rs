//! Seeded randomness. Every stochastic routine takes an explicit `u64` seed
//! and derives sub-seeds through [`derive_seed`], never from the clock.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Scalar;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; mixes `seed` with a salt so sibling streams do not overlap.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Salt from a stage name (FNV-1a), used for the pipeline's per-stage seeds.
pub fn name_salt(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn normal<T: Scalar>(rng: &mut Rng) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::of(x)
}

pub fn normal_vec<T: Scalar>(rng: &mut Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Uniformly distributed unit vector.
pub fn unit_vec<T: Scalar>(rng: &mut Rng, n: usize) -> Vec<T> {
    let mut v = normal_vec::<T>(rng, n);
    let nrm = crate::scalar::norm(&v);
    if nrm > T::zero() {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    v
}
