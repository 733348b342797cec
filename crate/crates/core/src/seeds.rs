//! Deterministic seed streams.
//!
//! A single 64-bit master seed is expanded into independent generator seeds
//! by hashing a (domain, a, b, c) counter tuple through SplitMix64 rounds.
//! Every random object in the crate (rotation diagonals, Gaussian matrices,
//! hyperplanes, feature-hash columns, Monte Carlo chunks) draws from its own
//! stream, so experiments are reproducible without storing matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every seeded stream.
pub type StreamRng = ChaCha8Rng;

/// Purpose tag mixed into the stream seed so unrelated objects never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    RotationSigns = 1,
    GaussianMatrix = 2,
    Hyperplane = 3,
    FeatureHash = 4,
    MonteCarlo = 5,
    Instance = 6,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `(domain, a, b, c)` under `master`.
pub fn stream_seed(master: u64, domain: Domain, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(master ^ 0x5EED_0F_C0FF_EE00);
    for word in [domain as u64, a, b, c] {
        h = splitmix64(h ^ word);
    }
    h
}

pub fn stream_rng(master: u64, domain: Domain, a: u64, b: u64, c: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, domain, a, b, c))
}
