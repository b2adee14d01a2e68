use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::modulate::ModulatorKind;
use crate::theory::{ChannelSpec, ErrorCostSpec};

/// Exhaustive ML decoding limit on the codebook size.
pub const DEFAULT_MAX_CODEBOOK: u64 = 1 << 20;

/// One Monte Carlo experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ecf: CostConfig,
    pub channel: ChannelConfig,
    pub modulator: ModulatorConfig,
    /// Strictly increasing block lengths.
    pub block_lengths: Vec<u32>,
    pub trials_per_probe: u64,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core. Never affects results.
    #[serde(default)]
    pub workers: usize,
    /// Outage radius `max_i |u_hat_i - u_i|` for the linear and spiral systems.
    #[serde(default = "default_outage_radius")]
    pub outage_radius: f64,
    /// Converse grid `(M_u, M_v)`; defaults to the quantizer levels.
    #[serde(default)]
    pub converse_grid: Option<[usize; 2]>,
    #[serde(default = "default_max_codebook")]
    pub max_codebook: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub q: f64,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub power: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatorConfig {
    pub kind: ModulatorKind,
    /// Fixed per-component levels; when absent, levels follow the optimal rates:
    /// `M_i = max(1, round(exp(n R_i rate_fraction)))`.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
    #[serde(default = "default_rate_fraction")]
    pub rate_fraction: f64,
    #[serde(default = "default_turns")]
    pub turns: f64,
    /// Candidate grid size of the spiral ML receiver.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

/// Parameter points at which the sup over `[0,1]^d` is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Seeded uniform interior points.
    #[serde(default = "default_random_probes")]
    pub random: usize,
    /// Coded systems: per component, cell boundaries `j / M_i` for `j = 0..=corner_cells`.
    #[serde(default = "default_corner_cells")]
    pub corner_cells: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            points: Vec::new(),
            random: default_random_probes(),
            corner_cells: default_corner_cells(),
        }
    }
}

fn default_outage_radius() -> f64 {
    0.1
}
fn default_max_codebook() -> u64 {
    DEFAULT_MAX_CODEBOOK
}
fn default_rate_fraction() -> f64 {
    1.0
}
fn default_turns() -> f64 {
    2.0
}
fn default_grid_points() -> usize {
    2048
}
fn default_random_probes() -> usize {
    32
}
fn default_corner_cells() -> usize {
    2
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.ecf.a.len()
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec<f64>> {
        ChannelSpec::new(self.channel.power, self.channel.noise_variance)
    }

    pub fn cost_at(&self, n: u32) -> Result<ErrorCostSpec<f64>> {
        ErrorCostSpec::new(self.ecf.q, self.ecf.a.clone(), n)
    }

    pub fn validate(&self) -> Result<()> {
        self.cost_at(1)?;
        self.channel_spec()?;
        if self.trials_per_probe == 0 {
            return Err(invalid("trials_per_probe must be >= 1"));
        }
        if self.block_lengths.is_empty() {
            return Err(invalid("block_lengths must be nonempty"));
        }
        if self.block_lengths[0] == 0 || self.block_lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("block_lengths must be positive and strictly increasing"));
        }
        let d = self.dim();
        for p in &self.probes.points {
            if p.len() != d {
                return Err(invalid(format!("probe {p:?} has dimension {}, expected {d}", p.len())));
            }
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid(format!("probe {p:?} outside [0,1]^d")));
            }
        }
        if !(self.outage_radius > 0.0) {
            return Err(invalid("outage_radius must be positive"));
        }
        let m = &self.modulator;
        match m.kind {
            ModulatorKind::QuantizeAndCode => {
                if let Some(levels) = &m.levels {
                    if levels.len() != d {
                        return Err(invalid(format!(
                            "{} levels given for a {d}-dimensional parameter",
                            levels.len()
                        )));
                    }
                } else if !(m.rate_fraction > 0.0 && m.rate_fraction.is_finite()) {
                    return Err(invalid("rate_fraction must be positive"));
                }
            }
            ModulatorKind::Linear | ModulatorKind::Spiral2d => {
                if d != 1 {
                    return Err(invalid(format!("{:?} modulator needs d = 1, got {d}", m.kind)));
                }
                if m.kind == ModulatorKind::Spiral2d {
                    if m.grid_points < 2 {
                        return Err(invalid("grid_points must be >= 2"));
                    }
                    if self.block_lengths != [2] {
                        return Err(invalid("spiral2d runs at block length 2 only"));
                    }
                }
            }
        }
        if self.probes.points.is_empty()
            && self.probes.random == 0
            && m.kind != ModulatorKind::QuantizeAndCode
        {
            return Err(invalid("probe set is empty"));
        }
        Ok(())
    }
}
