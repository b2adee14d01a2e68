//! Receivers `g_n: R^n -> [0,1]^d` with an explicit outage decision.

use crate::error::{invalid, Result};
use crate::modulate::{CodedModulator, Modulator};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub u_hat: Vec<f64>,
    pub outage: bool,
    pub decoded_message: Option<usize>,
}

/// ML-decodes `y` and returns the cell centers of the decoded index tuple.
///
/// `true_message` only sets the outage label (decoding error); it never affects
/// the estimate.
pub fn decode_dequantize(y: &[f64], coded: &CodedModulator, true_message: usize) -> EstimateOutcome {
    let decoded = coded.codebook().nearest(y);
    EstimateOutcome {
        u_hat: coded.reconstruct(decoded),
        outage: decoded != true_message,
        decoded_message: Some(decoded),
    }
}

/// Minimum-distance search over a fixed set of candidate parameters.
#[derive(Debug, Clone)]
pub struct MlGridReceiver {
    grid: Vec<Vec<f64>>,
    signals: Vec<Vec<f64>>,
}

impl MlGridReceiver {
    pub fn new(modulator: &Modulator, probe_grid: Vec<Vec<f64>>) -> Result<Self> {
        if probe_grid.is_empty() {
            return Err(invalid("probe grid must be nonempty"));
        }
        let signals = probe_grid
            .iter()
            .map(|u| modulator.modulate(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(MlGridReceiver { grid: probe_grid, signals })
    }

    /// Uniform grid `k / (points - 1)` on `[0, 1]` for scalar parameters.
    pub fn uniform(modulator: &Modulator, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(invalid("uniform probe grid needs at least two points"));
        }
        let grid = (0..points)
            .map(|k| vec![k as f64 / (points - 1) as f64])
            .collect();
        Self::new(modulator, grid)
    }

    /// Grid point whose signal is nearest to `y`; ties go to the earliest point.
    pub fn estimate(&self, y: &[f64]) -> &[f64] {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.signals.iter().enumerate() {
            let d: f64 = y.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        &self.grid[best]
    }
}

/// One-shot [`MlGridReceiver`] search.
pub fn ml_grid_estimate(y: &[f64], modulator: &Modulator, probe_grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(MlGridReceiver::new(modulator, probe_grid.to_vec())?.estimate(y).to_vec())
}

/// ML estimate for the linear modulator: `clamp((<y, s> / sqrt(nP) + 1) / 2, 0, 1)`.
pub fn linear_correlator_estimate(y: &[f64], power: f64, s_hat: &[f64]) -> f64 {
    assert_eq!(y.len(), s_hat.len(), "signal length");
    let n = y.len() as f64;
    let corr: f64 = y.iter().zip(s_hat).map(|(a, b)| a * b).sum();
    let amplitude = (n * power).sqrt();
    if amplitude == 0.0 {
        return 0.5;
    }
    ((corr / amplitude + 1.0) / 2.0).clamp(0.0, 1.0)
}
