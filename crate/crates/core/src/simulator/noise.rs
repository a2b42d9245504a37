//! Additive PMU measurement noise at a prescribed per-channel SNR.
//!
//! The reference power of each channel is the running mean square of that
//! channel's clean values up to and including the current sample, so the
//! noise standard deviation is `sqrt(P / 10^(snr_db / 10))`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::PmuSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub kind: NoiseKind,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
}

fn default_snr() -> f64 {
    45.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            snr_db: default_snr(),
        }
    }
}

/// Zero-mean unit-variance draw of the configured kind.
pub fn unit_draw(kind: NoiseKind, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        NoiseKind::None => 0.0,
        NoiseKind::Gaussian => StandardNormal.sample(rng),
        NoiseKind::Laplacian => {
            // inverse CDF with scale 1/sqrt(2), which has unit variance
            let u: f64 = rng.random::<f64>() - 0.5;
            let b = std::f64::consts::FRAC_1_SQRT_2;
            -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }
    }
}

/// Noise state for the PMU of one machine.
#[derive(Debug, Clone)]
pub struct PmuNoise {
    config: NoiseConfig,
    sum_sq: [f64; 5],
    count: u64,
}

impl PmuNoise {
    pub fn new(config: NoiseConfig) -> Self {
        Self {
            config,
            sum_sq: [0.0; 5],
            count: 0,
        }
    }

    pub fn apply(&mut self, clean: PmuSample, rng: &mut ChaCha8Rng) -> PmuSample {
        if self.config.kind == NoiseKind::None {
            return clean;
        }
        self.count += 1;
        let scale = 10f64.powf(-self.config.snr_db / 10.0);
        let y = clean.channels();
        let noisy = std::array::from_fn(|c| {
            self.sum_sq[c] += y[c] * y[c];
            let sigma = (self.sum_sq[c] / self.count as f64 * scale).sqrt();
            y[c] + sigma * unit_draw(self.config.kind, rng)
        });
        PmuSample::from_channels(clean.t, noisy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn clean(t: f64) -> PmuSample {
        PmuSample {
            t,
            y1: 1.02,
            y2: 0.85,
            y3: -0.11,
            y4: 0.86,
            y5: 60.0,
        }
    }

    fn run(kind: NoiseKind, n: usize) -> Vec<[f64; 5]> {
        let mut noise = PmuNoise::new(NoiseConfig { kind, snr_db: 45.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n)
            .map(|k| {
                let c = clean(k as f64);
                let y = noise.apply(c, &mut rng).channels();
                let yc = c.channels();
                std::array::from_fn(|i| y[i] - yc[i])
            })
            .collect()
    }

    #[test]
    fn none_is_identity() {
        let mut noise = PmuNoise::new(NoiseConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(noise.apply(clean(0.0), &mut rng), clean(0.0));
    }

    #[test]
    fn gaussian_snr_on_constant_signal() {
        let e = run(NoiseKind::Gaussian, 100_000);
        let y = clean(0.0).channels();
        for c in 0..5 {
            let pn: f64 = e.iter().map(|r| r[c] * r[c]).sum::<f64>() / e.len() as f64;
            let snr = 10.0 * (y[c] * y[c] / pn).log10();
            assert!((snr - 45.0).abs() < 0.5, "channel {c}: {snr}");
        }
    }

    #[test]
    fn laplacian_kurtosis() {
        let e = run(NoiseKind::Laplacian, 100_000);
        for c in 0..5 {
            let n = e.len() as f64;
            let m2 = e.iter().map(|r| r[c].powi(2)).sum::<f64>() / n;
            let m4 = e.iter().map(|r| r[c].powi(4)).sum::<f64>() / n;
            let k = m4 / (m2 * m2) - 3.0;
            assert!((k - 3.0).abs() < 0.5, "channel {c}: {k}");
        }
    }
}
