//! Seeded discrete-time AWGN channel `y = x + z`, `z ~ N(0, sigma^2 I)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::fill_standard_normals;

/// Noise variance plus the `(seed, stream)` key of its counter-based Gaussian stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(invalid(format!("noise variance must be finite and >= 0, got {sigma2}")));
        }
        Ok(NoiseModel { sigma2, seed, stream })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Writes noise draw `draw` into `z`.
    pub fn sample_into(&self, draw: u64, z: &mut [f64]) {
        fill_standard_normals(self.seed, self.stream, draw, z);
        let sigma = self.sigma();
        z.iter_mut().for_each(|v| *v *= sigma);
    }
}

/// `y = x + z` for noise draw `draw`.
pub fn transmit(x: &[f64], noise: &NoiseModel, draw: u64) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    transmit_into(x, noise, draw, &mut y);
    y
}

/// In-place variant of [`transmit`]; `y` must have the length of `x`.
pub fn transmit_into(x: &[f64], noise: &NoiseModel, draw: u64, y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "output length");
    if noise.sigma2 == 0.0 {
        y.copy_from_slice(x);
        return;
    }
    noise.sample_into(draw, y);
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += xi);
}

/// `ln p(z) = -(n/2) ln(2 pi sigma^2) - |z|^2 / (2 sigma^2)`.
pub fn log_density(z: &[f64], noise: &NoiseModel) -> Result<f64> {
    if noise.sigma2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let n = z.len() as f64;
    let energy: f64 = z.iter().map(|v| v * v).sum();
    Ok(-0.5 * n * (std::f64::consts::TAU * noise.sigma2).ln() - energy / (2.0 * noise.sigma2))
}
