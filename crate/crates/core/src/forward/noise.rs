//! Synthetic detector noise and noise-floor suppression.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::intensity::IntensityMap;
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    None,
    /// `I + ε · max(I) · N(0, 1)`, clipped at zero.
    Gaussian,
    /// Poisson counts with the photon budget chosen so the brightest pixel
    /// has relative spread `ε`.
    Shot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    #[serde(default)]
    pub model: NoiseModel,
    /// Relative amplitude `ε`.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gaussian(amplitude: f64, seed: u64) -> Self {
        Self {
            model: NoiseModel::Gaussian,
            amplitude,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.model == NoiseModel::None || self.amplitude == 0.0
    }

    /// Independent stream for the map called `label`.
    pub fn for_map(&self, label: &str) -> Self {
        Self {
            seed: derive_seed(self.seed, label),
            ..*self
        }
    }
}

/// Mix a master seed with a label (FNV-1a, then a splitmix64 finalizer).
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn apply_noise<T: Real>(map: &IntensityMap<T>, noise: &NoiseSpec) -> Result<IntensityMap<T>> {
    noise.validate()?;
    if noise.is_silent() {
        return Ok(map.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let peak = map.values.max_value();
    let eps = T::lit(noise.amplitude);
    let values = match noise.model {
        NoiseModel::None => map.values.clone(),
        NoiseModel::Gaussian => map.values.map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (v + eps * peak * T::lit(n)).max(T::zero())
        }),
        NoiseModel::Shot => {
            if !(peak > T::zero()) {
                map.values.clone()
            } else {
                let counts = T::one() / (eps * eps * peak);
                map.values.map(|&v| {
                    let mean = (v * counts).as_f64();
                    if mean <= 0.0 {
                        return T::zero();
                    }
                    let k: f64 = Poisson::new(mean).map(|d| d.sample(&mut rng)).unwrap_or(mean);
                    T::lit(k) / counts
                })
            }
        }
    };
    IntensityMap::new(values, map.plane, map.prep, map.proj, map.k_spacing)
}

/// Standard deviation of additive noise estimated from a clipped map.
///
/// With zero-mean noise clipped at zero, a background bin reads zero about
/// half the time; the same number of smallest positive readings then sample
/// the positive half-normal. Their median, at `0.6745 σ`, is used rather than
/// their mean because weak signal bins leak into the top of that sample.
/// Returns zero when no bin is clipped, or when positives are too few for
/// the zeros to come from clipping.
pub fn estimate_noise_floor<T: Real>(values: &Grid<T>) -> T {
    let zeros = values.iter().filter(|v| **v <= T::zero()).count();
    if zeros == 0 {
        return T::zero();
    }
    let mut positive: Vec<T> = values.iter().copied().filter(|v| *v > T::zero()).collect();
    // clipped noise leaves about as many small positives as zeros; far fewer
    // means the zeros are exact
    if 2 * positive.len() < zeros {
        return T::zero();
    }
    let rank = zeros.min(positive.len()).div_ceil(2);
    let (_, median, _) =
        positive.select_nth_unstable_by(rank - 1, |a, b| a.partial_cmp(b).expect("finite intensities"));
    *median / T::lit(0.6745)
}

/// Soft-threshold `I ← max(0, I − k σ̂)` with `σ̂` from [`estimate_noise_floor`].
pub fn subtract_noise_floor<T: Real>(values: &Grid<T>, sigmas: T) -> (Grid<T>, T) {
    let sigma = estimate_noise_floor(values);
    let cut = sigma * sigmas;
    (values.map(|&v| (v - cut).max(T::zero())), sigma)
}

/// Expected excess `E[(X − k)₊]` of a standard normal `X`.
fn normal_excess(k: f64) -> f64 {
    let pdf = (-0.5 * k * k).exp() / (2.0 * std::f64::consts::PI).sqrt();
    pdf - k * 0.5 * libm::erfc(k / std::f64::consts::SQRT_2)
}

/// Soft threshold with `k ≥ min_sigmas` raised in steps of 0.25 until the
/// expected noise power left above it, `n σ̂ E[(X − k)₊]`, is at most
/// `leakage` of the thresholded map's power (or `k` reaches 6).
/// Returns the map, `σ̂` and the `k` used.
pub fn adaptive_noise_floor<T: Real>(values: &Grid<T>, min_sigmas: f64, leakage: f64) -> (Grid<T>, T, f64) {
    let sigma = estimate_noise_floor(values);
    let mut k = min_sigmas;
    loop {
        let cut = sigma * T::lit(k);
        let out = values.map(|&v| (v - cut).max(T::zero()));
        let left = (T::of_usize(values.len()) * sigma).as_f64() * normal_excess(k);
        if sigma == T::zero() || left <= leakage * out.sum().as_f64() || k >= 6.0 {
            return (out, sigma, k);
        }
        k += 0.25;
    }
}
