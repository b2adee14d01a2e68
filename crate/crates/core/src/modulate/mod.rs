//! Modulators `f_n: [0,1]^d -> R^n` under the power constraint `|x|^2 <= n P`.
//!
//! * `QuantizeAndCode`: quantize every component to its own number of cells,
//!   map the index tuple to a message and send that message's codeword.
//! * `Linear` (`d = 1`): `x = (2u - 1) sqrt(nP) s` for the unit vector `s = (1,..,1)/sqrt(n)`.
//! * `Spiral2d` (`d = 1`, `n = 2`): Archimedean spiral of radius `sqrt(2P) u` and
//!   angle `2 pi turns u`.

mod codebook;
mod quantize;

pub use codebook::{build_codebook, Codebook, MessageMap, FORMAT_VERSION, MAGIC};
pub use quantize::{uniform_quantize, QuantizerSpec, Quantized};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scan::GridScan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulatorKind {
    Linear,
    QuantizeAndCode,
    Spiral2d,
}

/// Full description of one modulator at one block length.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorSpec {
    pub kind: ModulatorKind,
    pub n: usize,
    pub d: usize,
    pub power: f64,
    /// Per-component cell counts (quantize-and-code only).
    pub levels: Vec<usize>,
    /// Codebook seed (quantize-and-code only).
    pub seed: u64,
    /// Spiral revolutions over `u in [0, 1]` (spiral only).
    pub turns: f64,
}

impl ModulatorSpec {
    pub fn linear(n: usize, power: f64) -> Self {
        ModulatorSpec { kind: ModulatorKind::Linear, n, d: 1, power, levels: vec![], seed: 0, turns: 0.0 }
    }

    pub fn quantize_and_code(n: usize, power: f64, levels: Vec<usize>, seed: u64) -> Self {
        ModulatorSpec {
            kind: ModulatorKind::QuantizeAndCode,
            n,
            d: levels.len(),
            power,
            levels,
            seed,
            turns: 0.0,
        }
    }

    pub fn spiral2d(power: f64, turns: f64) -> Self {
        ModulatorSpec { kind: ModulatorKind::Spiral2d, n: 2, d: 1, power, levels: vec![], seed: 0, turns }
    }

    pub fn build(&self) -> Result<Modulator> {
        if self.n == 0 {
            return Err(invalid("block length must be positive"));
        }
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(invalid(format!("power must be finite and >= 0, got {}", self.power)));
        }
        match self.kind {
            ModulatorKind::Linear => {
                if self.d != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: self.d });
                }
                let s = 1.0 / (self.n as f64).sqrt();
                Ok(Modulator::Linear(LinearModulator {
                    amplitude: (self.n as f64 * self.power).sqrt(),
                    direction: vec![s; self.n],
                }))
            }
            ModulatorKind::QuantizeAndCode => {
                if self.levels.len() != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, got: self.levels.len() });
                }
                let quantizers = self
                    .levels
                    .iter()
                    .map(|&m| QuantizerSpec::new(m))
                    .collect::<Result<Vec<_>>>()?;
                let map = MessageMap::new(self.levels.clone())?;
                let codebook = Codebook::random(map, self.n, self.power, self.seed)?;
                Ok(Modulator::QuantizeAndCode(CodedModulator { quantizers, codebook }))
            }
            ModulatorKind::Spiral2d => {
                if self.d != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: self.d });
                }
                if self.n != 2 {
                    return Err(invalid(format!("spiral demo needs n = 2, got {}", self.n)));
                }
                if !(self.turns.is_finite() && self.turns > 0.0) {
                    return Err(invalid("spiral turns must be positive"));
                }
                Ok(Modulator::Spiral(SpiralModulator {
                    radius: (2.0 * self.power).sqrt(),
                    turns: self.turns,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModulator {
    amplitude: f64,
    direction: Vec<f64>,
}

impl LinearModulator {
    /// Unit vector the parameter is modulated onto.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedModulator {
    quantizers: Vec<QuantizerSpec>,
    codebook: Codebook,
}

impl CodedModulator {
    /// Quantize-and-code around an existing codebook; its message map fixes the levels.
    pub fn from_codebook(codebook: Codebook) -> Result<Self> {
        let quantizers = codebook
            .message_map()
            .levels()
            .iter()
            .map(|&m| QuantizerSpec::new(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodedModulator { quantizers, codebook })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn levels(&self) -> &[usize] {
        self.codebook.message_map().levels()
    }

    /// Message carrying the quantized version of `u`.
    pub fn message(&self, u: &[f64]) -> Result<usize> {
        let indices = self.cell(u)?;
        Ok(self.codebook.message_map().encode(&indices))
    }

    /// Per-component cell indices of `u`.
    pub fn cell(&self, u: &[f64]) -> Result<Vec<usize>> {
        check_dim(u, self.quantizers.len())?;
        u.iter()
            .zip(&self.quantizers)
            .map(|(&ui, q)| q.quantize(ui).map(|c| c.index))
            .collect()
    }

    /// Cell centers of the index tuple carried by `message`.
    pub fn reconstruct(&self, message: usize) -> Vec<f64> {
        self.codebook
            .message_map()
            .decode(message)
            .into_iter()
            .zip(&self.quantizers)
            .map(|(j, q)| q.center(j))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralModulator {
    radius: f64,
    turns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modulator {
    Linear(LinearModulator),
    QuantizeAndCode(CodedModulator),
    Spiral(SpiralModulator),
}

impl Modulator {
    pub fn dim(&self) -> usize {
        match self {
            Modulator::Linear(_) | Modulator::Spiral(_) => 1,
            Modulator::QuantizeAndCode(c) => c.quantizers.len(),
        }
    }

    pub fn block_length(&self) -> usize {
        match self {
            Modulator::Linear(l) => l.direction.len(),
            Modulator::QuantizeAndCode(c) => c.codebook.block_length(),
            Modulator::Spiral(_) => 2,
        }
    }

    pub fn modulate(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.block_length()];
        self.modulate_into(u, &mut x)?;
        Ok(x)
    }

    /// Writes `f_n(u)` into `x` (length `block_length()`).
    pub fn modulate_into(&self, u: &[f64], x: &mut [f64]) -> Result<()> {
        check_dim(u, self.dim())?;
        for &ui in u {
            if !(0.0..=1.0).contains(&ui) {
                return Err(Error::OutOfRange { value: ui });
            }
        }
        match self {
            Modulator::Linear(l) => {
                let a = (2.0 * u[0] - 1.0) * l.amplitude;
                x.iter_mut().zip(&l.direction).for_each(|(xi, &s)| *xi = a * s);
            }
            Modulator::QuantizeAndCode(c) => {
                let m = c.message(u)?;
                x.copy_from_slice(c.codebook.codeword(m));
            }
            Modulator::Spiral(s) => {
                let r = s.radius * u[0];
                let (sin, cos) = (std::f64::consts::TAU * s.turns * u[0]).sin_cos();
                x[0] = r * cos;
                x[1] = r * sin;
            }
        }
        Ok(())
    }
}

fn check_dim(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u.len() });
    }
    Ok(())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Length of the polyline through `f_n(path[0]), f_n(path[1]), ...`.
pub fn locus_polyline_length(modulator: &Modulator, path: &[Vec<f64>]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::EmptyPath(path.len()));
    }
    let signals = path
        .iter()
        .map(|u| modulator.modulate(u))
        .collect::<Result<Vec<_>>>()?;
    Ok(signals.windows(2).map(|w| distance(&w[0], &w[1])).sum())
}

/// Sum of `|f_n(w_{k+1}) - f_n(w_k)|` over the in-diagonal steps of a two-parameter
/// scan: the locus length consumed by the converse bound.
pub fn scan_locus_length(modulator: &Modulator, scan: &GridScan) -> Result<f64> {
    check_dim(&[0.0; 2], modulator.dim())?;
    let signals = scan
        .points::<f64>()
        .iter()
        .map(|p| modulator.modulate(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(scan
        .in_diagonal_steps()
        .map(|k| distance(&signals[k], &signals[k + 1]))
        .sum())
}
