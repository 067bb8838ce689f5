//! Additive Gaussian bearing noise.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::BearingSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation, rad.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn from_degrees(sigma_deg: f64, seed: u64) -> Self {
        Self {
            sigma: sigma_deg.to_radians(),
            seed,
        }
    }
}

pub fn noise_rng(cfg: &NoiseConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

/// Adds an independent `N(0, sigma²)` draw to each of the eight angles and
/// clamps the results back into their legal ranges.
pub fn corrupt_bearings<R: Rng + ?Sized>(truth: &BearingSet, cfg: &NoiseConfig, rng: &mut R) -> BearingSet {
    if cfg.sigma == 0.0 {
        return *truth;
    }
    let mut out = *truth;
    for a in out.alpha.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *a = (*a + cfg.sigma * n).clamp(-FRAC_PI_2, FRAC_PI_2);
    }
    for b in out.beta.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *b = (*b + cfg.sigma * n).clamp(0.0, PI);
    }
    out
}

/// SplitMix64 finaliser, used to derive independent per-run seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
