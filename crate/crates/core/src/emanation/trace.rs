use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EmanationError;

/// Uniformly sampled photodetector output in normalized irradiance units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalTrace {
    sample_rate: f64,
    samples: Vec<f64>,
    origin_time: f64,
}

impl OpticalTrace {
    pub fn new(
        sample_rate: f64,
        samples: Vec<f64>,
        origin_time: f64,
    ) -> Result<Self, EmanationError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(EmanationError::InvalidTrace(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if !origin_time.is_finite() {
            return Err(EmanationError::InvalidTrace(
                "origin time must be finite".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(EmanationError::InvalidTrace(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            sample_rate,
            samples,
            origin_time,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Absolute time of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.origin_time + i as f64 / self.sample_rate
    }

    /// Span covered by the samples, in seconds.
    pub fn span(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, EmanationError> {
        Self::new(
            self.sample_rate,
            self.samples.iter().map(|s| s * gain).collect(),
            self.origin_time,
        )
    }

    /// Smallest and largest sample, or `None` for an empty trace.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        let first = *self.samples.first()?;
        Some(
            self.samples
                .iter()
                .fold((first, first), |(lo, hi), &s| (lo.min(s), hi.max(s))),
        )
    }

    /// Appends another trace recorded at the same rate.
    pub fn concat(&self, other: &OpticalTrace) -> Result<Self, EmanationError> {
        if other.sample_rate != self.sample_rate {
            return Err(EmanationError::InvalidTrace(
                "cannot join traces with different sample rates".into(),
            ));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Self::new(self.sample_rate, samples, self.origin_time)
    }
}

/// Additive detector noise: a DC ambient term plus white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gaussian_sigma: f64,
    pub ambient_offset: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub const fn none() -> Self {
        Self {
            gaussian_sigma: 0.0,
            ambient_offset: 0.0,
            seed: 0,
        }
    }

    pub const fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma: sigma,
            ambient_offset: 0.0,
            seed,
        }
    }

    /// Same model with a seed derived for stream `index`.
    pub fn for_stream(&self, index: u64) -> Self {
        Self {
            seed: self.seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..*self
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

pub fn add_noise(trace: &OpticalTrace, noise: &NoiseModel) -> Result<OpticalTrace, EmanationError> {
    if !(noise.gaussian_sigma >= 0.0 && noise.gaussian_sigma.is_finite())
        || !noise.ambient_offset.is_finite()
    {
        return Err(EmanationError::Config(format!(
            "noise sigma {} must be finite and non-negative",
            noise.gaussian_sigma
        )));
    }
    let samples = if noise.gaussian_sigma == 0.0 {
        trace
            .samples()
            .iter()
            .map(|s| s + noise.ambient_offset)
            .collect()
    } else {
        let normal = Normal::new(0.0, noise.gaussian_sigma)
            .map_err(|e| EmanationError::Config(format!("noise distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        trace
            .samples()
            .iter()
            .map(|s| s + noise.ambient_offset + normal.sample(&mut rng))
            .collect()
    };
    OpticalTrace::new(trace.sample_rate(), samples, trace.origin_time())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let t = OpticalTrace::new(1e3, vec![0.0, 0.5, 1.0], 0.0).unwrap();
        assert_eq!(add_noise(&t, &NoiseModel::none()).unwrap(), t);
    }

    #[test]
    fn noise_statistics() {
        let t = OpticalTrace::new(1e6, vec![0.0; 1_000_000], 0.0).unwrap();
        let noise = NoiseModel {
            gaussian_sigma: 0.1,
            ambient_offset: 0.25,
            seed: 42,
        };
        let out = add_noise(&t, &noise).unwrap();
        let n = out.len() as f64;
        let mean = out.samples().iter().sum::<f64>() / n;
        let var = out
            .samples()
            .iter()
            .map(|s| (s - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        assert!((mean - 0.25).abs() < 0.001, "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.002, "sigma {}", var.sqrt());
    }

    #[test]
    fn same_seed_same_output() {
        let t = OpticalTrace::new(1e3, vec![0.3; 500], 0.0).unwrap();
        let noise = NoiseModel::gaussian(0.05, 7);
        let a = add_noise(&t, &noise).unwrap();
        let b = add_noise(&t, &noise).unwrap();
        assert!(a
            .samples()
            .iter()
            .zip(b.samples())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = add_noise(&t, &NoiseModel::gaussian(0.05, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(OpticalTrace::new(1.0, vec![f64::NAN], 0.0).is_err());
        assert!(OpticalTrace::new(0.0, vec![], 0.0).is_err());
        assert!(add_noise(
            &OpticalTrace::new(1.0, vec![0.0], 0.0).unwrap(),
            &NoiseModel::gaussian(-1.0, 0)
        )
        .is_err());
    }
}
