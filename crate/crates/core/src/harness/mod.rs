//! Monte Carlo runner for weak-noise experiments.
//!
//! For every block length `n` and probe `u`, `trials_per_probe` transmissions are
//! simulated. The weak-noise cost of a probe is its mean cost over non-outage
//! trials; the experiment reports the sup over probes, the empirical outage rate
//! `delta_n` (max over probes), and an exponent fitted across block lengths.
//!
//! Noise for trial `t` of probe `p` at block length `n` is draw `t` of the Gaussian
//! stream keyed by `(derive_seed(master, n), p)`, so each record is a pure function
//! of the config. Trials run on a rayon pool, records come back in canonical
//! `(n, probe, trial)` order, and all aggregation is sequential over that order:
//! outputs are bit-identical for any worker count.

mod config;
mod output;
mod stats;

pub use config::{
    ChannelConfig, CostConfig, ExperimentConfig, ModulatorConfig, ProbeConfig, DEFAULT_MAX_CODEBOOK,
};
pub use output::{
    write_converse_csv, write_summary_csv, write_sweep_csv, write_trials_ndjson, CONVERSE_CSV_HEADER,
    SUMMARY_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use stats::{estimate_exponent, wilson_upper, ExponentFit, Z95};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{transmit_into, NoiseModel};
use crate::error::{invalid, Error, Result};
use crate::estimate::{decode_dequantize, linear_correlator_estimate, MlGridReceiver};
use crate::modulate::{scan_locus_length, CodedModulator, Modulator, ModulatorKind, ModulatorSpec};
use crate::rng::{derive_seed, fill_uniforms};
use crate::scan::diagonal_scan;
use crate::theory::{finite_n_converse_bound, optimal_rates, weak_noise_exponent, ErrorCostSpec};

const NOISE_TAG: u64 = 0x006e_6f69_7365;
const CODEBOOK_TAG: u64 = 0x636f_6465;
const PROBE_TAG: u64 = 0x0070_726f_6265;

/// One simulated transmission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: u32,
    pub probe: usize,
    pub u: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub outage: bool,
    /// `rho(u_hat - u)` with the cost weights realized at this record's `n`.
    pub cost: f64,
    pub trial: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeStats {
    pub u: Vec<f64>,
    pub trials: u64,
    pub outages: u64,
    pub cost_sum: f64,
    /// Mean cost over non-outage trials; `None` if every trial was an outage.
    pub conditional_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub n: u32,
    /// Quantizer levels used at this `n` (coded systems).
    pub levels: Option<Vec<usize>>,
    pub probes: Vec<ProbeStats>,
    /// Sup over probes of the conditional cost; `None` when some probe is all-outage.
    pub sup_cost: Option<f64>,
    pub sup_probe: Option<usize>,
    /// Max over probes of the raw outage fraction.
    pub delta_n: f64,
    /// Max over probes of the 95% Wilson upper bound on the outage probability.
    pub delta_n_upper: f64,
    /// Probes with no non-outage trial.
    pub all_outage_probes: Vec<usize>,
    /// Converse lower bound (two-parameter coded systems), evaluated with `delta_n_upper`.
    pub converse_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    /// Optimal exponent `E(gamma)`; `None` when A.1 fails.
    pub theory_exponent: Option<f64>,
    pub blocks: Vec<BlockSummary>,
    /// Fit of `-ln sup_cost` against `n`; needs two blocks with positive cost.
    pub fit: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<TrialRecord>,
}

impl ExperimentOutput {
    /// First `(n, probe)` without a non-outage trial.
    pub fn first_all_outage(&self) -> Option<(u32, usize)> {
        self.summary
            .blocks
            .iter()
            .find_map(|b| b.all_outage_probes.first().map(|&p| (b.n, p)))
    }
}

/// Levels at block length `n`: the configured ones, or `max(1, round(exp(n R_i f)))`
/// from the optimal rate split scaled by the rate fraction `f`.
pub fn levels_for(config: &ExperimentConfig, n: u32) -> Result<Vec<usize>> {
    if let Some(levels) = &config.modulator.levels {
        return Ok(levels.clone());
    }
    let rates = optimal_rates(&config.cost_at(n)?, &config.channel_spec()?)?;
    rates
        .rates
        .iter()
        .map(|&r| {
            let m = (f64::from(n) * r * config.modulator.rate_fraction).exp().round();
            if m >= usize::MAX as f64 {
                Err(Error::CodebookTooLarge { size: u128::MAX, limit: config.max_codebook })
            } else {
                Ok((m as usize).max(1))
            }
        })
        .collect()
}

struct Block {
    n: u32,
    ecf: ErrorCostSpec<f64>,
    modulator: Modulator,
    receiver: Receiver,
    levels: Option<Vec<usize>>,
}

enum Receiver {
    Coded,
    Correlator { power: f64, direction: Vec<f64> },
    Grid(MlGridReceiver),
}

fn build_block(config: &ExperimentConfig, n: u32) -> Result<Block> {
    let ecf = config.cost_at(n)?;
    let power = config.channel.power;
    let m = &config.modulator;
    let (spec, levels) = match m.kind {
        ModulatorKind::QuantizeAndCode => {
            let levels = levels_for(config, n)?;
            let size = levels.iter().fold(1u128, |acc, &l| acc.saturating_mul(l as u128));
            if size > u128::from(config.max_codebook) {
                return Err(Error::CodebookTooLarge { size, limit: config.max_codebook });
            }
            let seed = derive_seed(&[config.master_seed, CODEBOOK_TAG, u64::from(n)]);
            (ModulatorSpec::quantize_and_code(n as usize, power, levels.clone(), seed), Some(levels))
        }
        ModulatorKind::Linear => (ModulatorSpec::linear(n as usize, power), None),
        ModulatorKind::Spiral2d => (ModulatorSpec::spiral2d(power, m.turns), None),
    };
    let modulator = spec.build()?;
    let receiver = match &modulator {
        Modulator::QuantizeAndCode(_) => Receiver::Coded,
        Modulator::Linear(l) => Receiver::Correlator { power, direction: l.direction().to_vec() },
        Modulator::Spiral(_) => Receiver::Grid(MlGridReceiver::uniform(&modulator, m.grid_points)?),
    };
    Ok(Block { n, ecf, modulator, receiver, levels })
}

/// Probe set at one block length: explicit points, corner cell boundaries (coded),
/// then seeded random interior points (identical across block lengths).
pub fn probe_set(config: &ExperimentConfig, levels: Option<&[usize]>) -> Vec<Vec<f64>> {
    let mut probes = config.probes.points.clone();
    if let Some(levels) = levels {
        let axes: Vec<Vec<f64>> = levels
            .iter()
            .map(|&m| {
                (0..=config.probes.corner_cells.min(m))
                    .map(|j| if j == m { 1.0 } else { j as f64 / m as f64 })
                    .collect()
            })
            .collect();
        let mut corner = vec![Vec::new()];
        for axis in &axes {
            corner = corner
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        probes.extend(corner);
    }
    let d = config.dim();
    let seed = derive_seed(&[config.master_seed, PROBE_TAG]);
    for k in 0..config.probes.random {
        let mut u = vec![0.0; d];
        fill_uniforms(seed, 0, k as u64, &mut u);
        probes.push(u);
    }
    probes
}

fn noise_model(config: &ExperimentConfig, n: u32, probe: usize) -> NoiseModel {
    NoiseModel {
        sigma2: config.channel.noise_variance,
        seed: derive_seed(&[config.master_seed, NOISE_TAG, u64::from(n)]),
        stream: probe as u64,
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))
}

fn run_trial(
    config: &ExperimentConfig,
    block: &Block,
    probe: usize,
    u: &[f64],
    x: &[f64],
    true_message: Option<usize>,
    trial: u64,
) -> TrialRecord {
    let mut y = vec![0.0; x.len()];
    transmit_into(x, &noise_model(config, block.n, probe), trial, &mut y);
    let (u_hat, outage) = match (&block.receiver, &block.modulator) {
        (Receiver::Coded, Modulator::QuantizeAndCode(coded)) => {
            let out = decode_dequantize(&y, coded, true_message.expect("coded probe has a message"));
            (out.u_hat, out.outage)
        }
        (Receiver::Correlator { power, direction }, _) => {
            (vec![linear_correlator_estimate(&y, *power, direction)], false)
        }
        (Receiver::Grid(rx), _) => (rx.estimate(&y).to_vec(), false),
        (Receiver::Coded, _) => unreachable!("coded receiver paired with uncoded modulator"),
    };
    let err: Vec<f64> = u_hat.iter().zip(u).map(|(a, b)| a - b).collect();
    let outage = outage
        || (!matches!(block.receiver, Receiver::Coded)
            && err.iter().any(|e| e.abs() > config.outage_radius));
    TrialRecord {
        n: block.n,
        probe,
        u: u.to_vec(),
        u_hat,
        outage,
        cost: block.ecf.cost(&err),
        trial,
    }
}

fn simulate_block(
    config: &ExperimentConfig,
    block: &Block,
    probes: &[Vec<f64>],
    pool: &rayon::ThreadPool,
) -> Result<Vec<TrialRecord>> {
    let signals = probes
        .iter()
        .map(|u| block.modulator.modulate(u))
        .collect::<Result<Vec<_>>>()?;
    let messages: Vec<Option<usize>> = match &block.modulator {
        Modulator::QuantizeAndCode(c) => probes
            .iter()
            .map(|u| c.message(u).map(Some))
            .collect::<Result<_>>()?,
        _ => vec![None; probes.len()],
    };
    let trials = config.trials_per_probe;
    let total = probes.len() as u64 * trials;
    Ok(pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|idx| {
                let p = (idx / trials) as usize;
                run_trial(config, block, p, &probes[p], &signals[p], messages[p], idx % trials)
            })
            .collect()
    }))
}

/// Aggregates one block's records (canonical order) into per-probe and sup statistics.
pub fn summarize_block(
    n: u32,
    levels: Option<Vec<usize>>,
    probes: &[Vec<f64>],
    records: &[TrialRecord],
) -> BlockSummary {
    let mut stats: Vec<ProbeStats> = probes
        .iter()
        .map(|u| ProbeStats { u: u.clone(), trials: 0, outages: 0, cost_sum: 0.0, conditional_cost: None })
        .collect();
    for r in records.iter().filter(|r| r.n == n) {
        let s = &mut stats[r.probe];
        s.trials += 1;
        if r.outage {
            s.outages += 1;
        } else {
            s.cost_sum += r.cost;
        }
    }
    let mut all_outage_probes = Vec::new();
    for (p, s) in stats.iter_mut().enumerate() {
        let good = s.trials - s.outages;
        if good == 0 {
            all_outage_probes.push(p);
        } else {
            s.conditional_cost = Some(s.cost_sum / good as f64);
        }
    }
    let (sup_cost, sup_probe) = if all_outage_probes.is_empty() {
        let mut best: Option<(f64, usize)> = None;
        for (p, s) in stats.iter().enumerate() {
            let c = s.conditional_cost.expect("no all-outage probes");
            if best.is_none_or(|(b, _)| c > b) {
                best = Some((c, p));
            }
        }
        (best.map(|b| b.0), best.map(|b| b.1))
    } else {
        (None, None)
    };
    let rate = |s: &ProbeStats| if s.trials == 0 { 0.0 } else { s.outages as f64 / s.trials as f64 };
    let delta_n = stats.iter().map(rate).fold(0.0, f64::max);
    let delta_n_upper = stats
        .iter()
        .map(|s| wilson_upper(s.outages, s.trials, Z95))
        .fold(0.0, f64::max);
    BlockSummary {
        n,
        levels,
        probes: stats,
        sup_cost,
        sup_probe,
        delta_n,
        delta_n_upper,
        all_outage_probes,
        converse_bound: None,
    }
}

fn converse_grid(config: &ExperimentConfig, levels: Option<&[usize]>) -> Option<[usize; 2]> {
    if config.dim() != 2 || config.modulator.kind != ModulatorKind::QuantizeAndCode {
        return None;
    }
    config.converse_grid.or_else(|| levels.map(|l| [l[0], l[1]]))
}

/// Converse bound for a two-parameter coded block, or `None` when the grid is degenerate.
fn block_converse(
    config: &ExperimentConfig,
    block: &Block,
    delta: f64,
) -> Result<Option<(f64, f64, [usize; 2])>> {
    let Some([mu, mv]) = converse_grid(config, block.levels.as_deref()) else {
        return Ok(None);
    };
    if mu < 2 || mv < 2 || (mu * mv) as i64 - (mu + mv) as i64 <= 0 {
        return Ok(None);
    }
    let scan = diagonal_scan(mu, mv)?;
    let length = scan_locus_length(&block.modulator, &scan)?;
    let sigma = config.channel.noise_variance.sqrt();
    let bound = finite_n_converse_bound(&block.ecf, mu, mv, sigma, length, delta)?;
    Ok(Some((bound, length, [mu, mv])))
}

fn theory_exponent(config: &ExperimentConfig) -> Result<Option<f64>> {
    match weak_noise_exponent(&config.cost_at(1)?, &config.channel_spec()?) {
        Ok(e) => Ok(Some(e)),
        Err(Error::A1Violated { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs every block and returns summaries and records; probes without any
/// non-outage trial are flagged in the summary rather than reported as errors.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let mut blocks = Vec::with_capacity(config.block_lengths.len());
    let mut records = Vec::new();
    for &n in &config.block_lengths {
        let block = build_block(config, n)?;
        let probes = probe_set(config, block.levels.as_deref());
        let block_records = simulate_block(config, &block, &probes, &pool)?;
        let mut summary = summarize_block(n, block.levels.clone(), &probes, &block_records);
        summary.converse_bound = block_converse(config, &block, summary.delta_n_upper)?.map(|c| c.0);
        blocks.push(summary);
        records.extend(block_records);
    }
    let fit_points: Vec<(u32, f64)> = blocks
        .iter()
        .filter_map(|b| b.sup_cost.filter(|&c| c > 0.0).map(|c| (b.n, c)))
        .collect();
    let fit = if fit_points.len() >= 2 { Some(estimate_exponent(&fit_points)?) } else { None };
    Ok(ExperimentOutput {
        summary: ExperimentSummary { theory_exponent: theory_exponent(config)?, blocks, fit },
        records,
    })
}

/// [`simulate`], failing with [`Error::AllOutage`] if any probe lacks a non-outage trial.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let out = simulate(config)?;
    if let Some((n, probe)) = out.first_all_outage() {
        return Err(Error::AllOutage { n, probe });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub n: u32,
    pub sup_cost: Option<f64>,
    pub delta_n: f64,
    pub exponent_theory: Option<f64>,
    pub converse_bound: Option<f64>,
}

/// Counts of adjacent pairs that break the expected monotone trend in `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepDiagnostics {
    /// `sup_cost` increasing with `gamma`.
    pub cost_inversions: usize,
    /// `delta_n` increasing with `gamma`.
    pub outage_inversions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub diagnostics: SweepDiagnostics,
}

/// Repeats the experiment at the largest configured block length for each SNR.
///
/// The noise variance stays fixed and the power is set to `gamma * sigma^2`, so
/// every SNR reuses the same noise draws and `gamma = 0` is a silent transmitter.
pub fn snr_sweep(config: &ExperimentConfig, gammas: &[f64]) -> Result<SweepResult> {
    if gammas.is_empty() {
        return Err(invalid("gamma list must be nonempty"));
    }
    let n = *config
        .block_lengths
        .last()
        .ok_or_else(|| invalid("block_lengths must be nonempty"))?;
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(invalid(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        let mut cfg = config.clone();
        cfg.block_lengths = vec![n];
        cfg.channel.power = gamma * config.channel.noise_variance;
        let out = run_experiment(&cfg)?;
        let block = &out.summary.blocks[0];
        rows.push(SweepRow {
            gamma,
            n,
            sup_cost: block.sup_cost,
            delta_n: block.delta_n,
            exponent_theory: out.summary.theory_exponent,
            converse_bound: block.converse_bound,
        });
    }
    let inversions = |f: &dyn Fn(&SweepRow) -> Option<f64>| {
        rows.windows(2)
            .filter(|w| matches!((f(&w[0]), f(&w[1])), (Some(a), Some(b)) if b > a))
            .count()
    };
    let diagnostics = SweepDiagnostics {
        cost_inversions: inversions(&|r| r.sup_cost),
        outage_inversions: inversions(&|r| Some(r.delta_n)),
    };
    Ok(SweepResult { rows, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseCheck {
    pub n: u32,
    pub grid: [usize; 2],
    /// In-diagonal polyline length of the signal locus over the scan grid.
    pub locus_length: f64,
    /// Outage level fed to the bound.
    pub delta_n: f64,
    pub bound: f64,
    pub measured_sup_cost: f64,
    pub satisfied: bool,
}

/// Simulates a two-parameter coded system with every scan grid point added to the
/// probe set and compares the measured sup weak-noise cost with the converse bound.
///
/// `delta_override` replaces the measured outage level (max over probes of the
/// Wilson upper bound) in the bound.
pub fn converse_check(config: &ExperimentConfig, delta_override: Option<f64>) -> Result<Vec<ConverseCheck>> {
    config.validate()?;
    if config.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: config.dim() });
    }
    if config.modulator.kind != ModulatorKind::QuantizeAndCode {
        return Err(invalid("converse check needs a quantize_and_code modulator"));
    }
    let pool = thread_pool(config.workers)?;
    let mut checks = Vec::with_capacity(config.block_lengths.len());
    for &n in &config.block_lengths {
        let block = build_block(config, n)?;
        let [mu, mv] = converse_grid(config, block.levels.as_deref()).expect("coded d = 2");
        let scan = diagonal_scan(mu, mv)?;
        let mut probes: Vec<Vec<f64>> = scan.points::<f64>().into_iter().map(|p| p.to_vec()).collect();
        probes.extend(probe_set(config, block.levels.as_deref()));
        let records = simulate_block(config, &block, &probes, &pool)?;
        let summary = summarize_block(n, block.levels.clone(), &probes, &records);
        if let Some(&probe) = summary.all_outage_probes.first() {
            return Err(Error::AllOutage { n, probe });
        }
        let measured = summary.sup_cost.expect("no all-outage probes");
        let delta = delta_override.unwrap_or(summary.delta_n_upper);
        let length = scan_locus_length(&block.modulator, &scan)?;
        let sigma = config.channel.noise_variance.sqrt();
        let bound = finite_n_converse_bound(&block.ecf, mu, mv, sigma, length, delta)?;
        checks.push(ConverseCheck {
            n,
            grid: [mu, mv],
            locus_length: length,
            delta_n: delta,
            bound,
            measured_sup_cost: measured,
            satisfied: measured >= bound,
        });
    }
    Ok(checks)
}

/// The coded modulator a config builds at block length `n` (for export and inspection).
pub fn coded_modulator(config: &ExperimentConfig, n: u32) -> Result<CodedModulator> {
    config.validate()?;
    match build_block(config, n)?.modulator {
        Modulator::QuantizeAndCode(c) => Ok(c),
        _ => Err(invalid("config does not describe a quantize_and_code modulator")),
    }
}
