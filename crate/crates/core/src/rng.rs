//! Counter-based substream derivation.
//!
//! Every random stream is a ChaCha8 generator keyed by the master seed, with
//! the 64-bit stream id packed as `tag << 56 | a << 20 | b`. `a` is usually a
//! replica or particle index and `b` a dimension or atom index, so the draws
//! seen by one (replica, component) never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    FbmCholesky = 1,
    FbmCirculant = 2,
    FbmVolterra = 3,
    Particle = 4,
    Picard = 5,
    Backward = 6,
    Chapman = 7,
    Diagnostics = 8,
    Resample = 9,
}

pub const MAX_A: u64 = 1 << 36;
pub const MAX_B: u64 = 1 << 20;

pub fn substream(seed: u64, tag: StreamTag, a: u64, b: u64) -> ChaCha8Rng {
    assert!(a < MAX_A && b < MAX_B, "substream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 56) | (a << 20) | b);
    rng
}

pub fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64], scale: f64) {
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = scale * z;
    }
}

/// Derives a child seed so that nested experiments (e.g. a control run) get
/// streams disjoint from the parent's.
pub fn child_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
