use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use weaknoise::harness::{
    coded_modulator, converse_check, simulate, snr_sweep, write_converse_csv, write_summary_csv,
    write_sweep_csv, write_trials_ndjson, ExperimentConfig,
};
use weaknoise::report::fmt_f64;
use weaknoise::scan::diagonal_scan;
use weaknoise::theory::{
    check_assumption_a1, optimal_rates, supmin_oracle, weak_noise_exponent, ChannelSpec, ErrorCostSpec,
};
use weaknoise::Error;

const EXIT_INVALID: u8 = 2;
const EXIT_A1: u8 = 3;
const EXIT_ALL_OUTAGE: u8 = 4;
const EXIT_CONVERSE: u8 = 5;

const OUTPUT_HELP: &str = "\
Exit codes:
  0  success
  1  I/O or other runtime failure
  2  invalid flags or config
  3  assumption A.1 violated (theory --strict)
  4  some probe had no non-outage trial
  5  converse check failed (measured sup cost below the bound)

All rates and capacities are in nats per channel use. Floats in CSV and NDJSON
output carry 17 significant digits; empty CSV cells mean \"not available\".";

const SCAN_HELP: &str = "\
CSV columns:
  k            scan position
  i, j         integer grid coordinates
  u, v         parameter coordinates i/M_u and j/M_v
  is_rollover  true if the step from k to k+1 moves to the next diagonal";

const SIMULATE_HELP: &str = "\
Writes into --out:
  manifest.json   config digest, tool version, timestamps, output files
  trials.ndjson   one trial per line: n, probe, u, u_hat, outage, cost, trial
  summary.csv     one row per block length:
    n                block length
    sup_cost         max over probes of the mean cost over non-outage trials
    delta_n          max over probes of the empirical outage rate
    exponent_theory  optimal exponent (q C + sum a) / d, empty if A.1 fails
    exponent_fit     slope of -ln(sup_cost) against n over all block lengths
    converse_bound   finite-n converse bound (two-parameter coded runs only)
  codebook_n<N>.wncb  with --export-codebooks, one per block length";

const SWEEP_HELP: &str = "\
The power is set to gamma * noise_variance at each point; the last block length
of the config is used. CSV columns:
  gamma            signal-to-noise ratio
  sup_cost         max over probes of the mean cost over non-outage trials
  delta_n          max over probes of the empirical outage rate
  exponent_theory  optimal exponent at this gamma, empty if A.1 fails
  converse_bound   finite-n converse bound (two-parameter coded runs only)";

const CONVERSE_HELP: &str = "\
CSV columns:
  n                  block length
  m_u, m_v           scan grid size
  locus_length       signal locus length along the scan diagonals
  delta_n            outage level fed to the bound
  bound              finite-n converse bound
  measured_sup_cost  simulated sup weak-noise cost (scan points included as probes)
  satisfied          measured_sup_cost >= bound";

#[derive(Parser, Debug)]
#[command(name = "weaknoise", version, about = "Weak-noise modulation-estimation over the AWGN channel")]
#[command(after_long_help = OUTPUT_HELP)]
struct Cli {
    /// Overrides the master seed of a config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true, env = "WEAKNOISE_WORKERS")]
    workers: Option<usize>,
    /// Print machine-readable JSON to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity, optimal exponent and rate split for a cost shape and SNR.
    Theory(TheoryArgs),
    /// Dump the diagonal scan of an M_u x M_v grid.
    #[command(after_long_help = SCAN_HELP)]
    Scan(ScanArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    #[command(after_long_help = SIMULATE_HELP)]
    Simulate(SimulateArgs),
    /// Repeat an experiment over a list of SNRs.
    #[command(after_long_help = SWEEP_HELP)]
    Sweep(SweepArgs),
    /// Compare a two-parameter coded system with the finite-n converse bound.
    #[command(after_long_help = CONVERSE_HELP)]
    Converse(ConverseArgs),
}

#[derive(Args, Debug)]
struct TheoryArgs {
    /// Cost power q >= 1.
    #[arg(long)]
    q: f64,
    /// Comma-separated exponents a_1..a_d.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    a: Vec<f64>,
    /// Signal-to-noise ratio P / sigma^2.
    #[arg(long, conflicts_with_all = ["power", "noise_variance"])]
    gamma: Option<f64>,
    #[arg(long, requires = "noise_variance")]
    power: Option<f64>,
    #[arg(long, requires = "power")]
    noise_variance: Option<f64>,
    /// Parameter dimension; a single `--a` value is repeated d times.
    #[arg(long)]
    d: Option<usize>,
    /// Cross-check against a brute-force grid search with this many steps.
    #[arg(long, num_args = 0..=1, default_missing_value = "2000")]
    oracle: Option<usize>,
    /// Exit with code 3 if assumption A.1 fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long = "mu")]
    m_u: usize,
    #[arg(long = "mv")]
    m_v: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON experiment config.
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Also write each block's codebook in the binary WNCB format.
    #[arg(long)]
    export_codebooks: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    config: PathBuf,
    /// Comma-separated SNR values.
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    /// Output directory for sweep.csv and manifest.json; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConverseArgs {
    config: PathBuf,
    /// Outage level used in the bound instead of the measured one.
    #[arg(long)]
    delta: Option<f64>,
    /// Output directory for converse.csv and manifest.json; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying the process exit code.
#[derive(Debug)]
struct Exit {
    code: u8,
    message: String,
}

fn exit(code: u8, message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Exit { code, message: message.into() })
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

/// Maps library errors that stem from user input to exit code 2.
fn classify(err: Error) -> anyhow::Error {
    match err {
        Error::AllOutage { .. } => exit(EXIT_ALL_OUTAGE, err.to_string()),
        Error::Io(e) => anyhow::Error::new(e),
        other => exit(EXIT_INVALID, other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = err.downcast_ref::<Exit>().map_or(1, |e| e.code);
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let global = Global { seed: cli.seed, workers: cli.workers, json: cli.json };
    match cli.command {
        Command::Theory(args) => cmd_theory(&global, args),
        Command::Scan(args) => cmd_scan(&global, args),
        Command::Simulate(args) => cmd_simulate(&global, args),
        Command::Sweep(args) => cmd_sweep(&global, args),
        Command::Converse(args) => cmd_converse(&global, args),
    }
}

struct Global {
    seed: Option<u64>,
    workers: Option<usize>,
    json: bool,
}

#[derive(Serialize)]
struct TheoryReport {
    q: f64,
    a: Vec<f64>,
    gamma: f64,
    capacity: f64,
    a1_satisfied: bool,
    exponent: Option<f64>,
    rates: Option<Vec<f64>>,
    oracle: Option<OracleReport>,
}

#[derive(Serialize)]
struct OracleReport {
    grid_steps: usize,
    value: f64,
    rates: Vec<f64>,
}

fn cmd_theory(global: &Global, args: TheoryArgs) -> Result<()> {
    let mut a = args.a.clone();
    if let Some(d) = args.d {
        if a.len() == 1 && d > 1 {
            a = vec![a[0]; d];
        } else if a.len() != d {
            return Err(exit(EXIT_INVALID, format!("--d {d} does not match {} exponents", a.len())));
        }
    }
    let channel = match (args.gamma, args.power, args.noise_variance) {
        (Some(g), _, _) => ChannelSpec::from_snr(g),
        (None, Some(p), Some(s)) => ChannelSpec::new(p, s),
        _ => return Err(exit(EXIT_INVALID, "give --gamma or both --power and --noise-variance")),
    }
    .map_err(classify)?;
    let ecf = ErrorCostSpec::new(args.q, a.clone(), 1).map_err(classify)?;
    let satisfied = check_assumption_a1(&ecf, &channel);
    let (exponent, rates) = if satisfied {
        let e = weak_noise_exponent(&ecf, &channel).map_err(classify)?;
        let r = optimal_rates(&ecf, &channel).map_err(classify)?;
        (Some(e), Some(r.rates))
    } else {
        (None, None)
    };
    let oracle = match args.oracle {
        Some(steps) => {
            let o = supmin_oracle(&ecf, &channel, steps).map_err(classify)?;
            Some(OracleReport { grid_steps: steps, value: o.value, rates: o.rates })
        }
        None => None,
    };
    let report = TheoryReport {
        q: args.q,
        a,
        gamma: channel.gamma(),
        capacity: channel.capacity(),
        a1_satisfied: satisfied,
        exponent,
        rates,
        oracle,
    };
    let mut out = io::stdout().lock();
    if global.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        let list = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "n/a".into());
        writeln!(out, "gamma        {}", fmt_f64(report.gamma))?;
        writeln!(out, "capacity     {} nats", fmt_f64(report.capacity))?;
        writeln!(out, "A.1          {}", if satisfied { "satisfied" } else { "violated" })?;
        writeln!(out, "exponent     {}", opt(report.exponent))?;
        match &report.rates {
            Some(r) => writeln!(out, "rates        [{}] nats", list(r))?,
            None => writeln!(out, "rates        n/a")?,
        }
        if let Some(o) = &report.oracle {
            writeln!(out, "oracle       {} (grid {})", fmt_f64(o.value), o.grid_steps)?;
            writeln!(out, "oracle rates [{}]", list(&o.rates))?;
        }
    }
    if args.strict && !satisfied {
        return Err(exit(EXIT_A1, "assumption A.1 violated"));
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanRow {
    k: usize,
    i: usize,
    j: usize,
    u: f64,
    v: f64,
    is_rollover: bool,
}

fn cmd_scan(global: &Global, args: ScanArgs) -> Result<()> {
    let scan = diagonal_scan(args.m_u, args.m_v).map_err(classify)?;
    let mut sink: Box<dyn Write> = match &args.csv {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    if global.json && args.csv.is_none() {
        let rows: Vec<ScanRow> = scan
            .order()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let [u, v] = scan.point::<f64>(k);
                ScanRow { k, i: g.i, j: g.j, u, v, is_rollover: scan.is_rollover(k) }
            })
            .collect();
        serde_json::to_writer_pretty(&mut sink, &rows)?;
        writeln!(sink)?;
    } else {
        scan.write_csv(&mut sink)?;
    }
    sink.flush()?;
    Ok(())
}

fn load_config(path: &Path, global: &Global) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| exit(EXIT_INVALID, format!("reading {}: {e}", path.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| exit(EXIT_INVALID, format!("parsing {}: {e}", path.display())))?;
    if let Some(seed) = global.seed {
        config.master_seed = seed;
    }
    if let Some(workers) = global.workers {
        config.workers = workers;
    }
    config.validate().map_err(classify)?;
    Ok(config)
}

/// SHA-256 of the canonical JSON form of the config: sorted keys, no whitespace,
/// shortest round-trip floats. The worker count is zeroed since it never changes results.
fn config_digest(config: &ExperimentConfig) -> Result<String> {
    let mut canonical = config.clone();
    canonical.workers = 0;
    let value = serde_json::to_value(&canonical)?;
    let text = serde_json::to_string(&value)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_digest: String,
    config: ExperimentConfig,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<String>,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn write_manifest(
    dir: &Path,
    command: &'static str,
    config: &ExperimentConfig,
    started: u128,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_digest: config_digest(config)?,
        config: config.clone(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        outputs,
    };
    let path = dir.join("manifest.json");
    let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_simulate(global: &Global, args: SimulateArgs) -> Result<()> {
    let started = unix_ms();
    let config = load_config(&args.config, global)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let output = simulate(&config).map_err(classify)?;

    let mut outputs = vec!["trials.ndjson".to_string(), "summary.csv".to_string()];
    let mut f = create_file(&args.out, "trials.ndjson")?;
    write_trials_ndjson(&output.records, &mut f)?;
    f.flush()?;
    let mut f = create_file(&args.out, "summary.csv")?;
    write_summary_csv(&output.summary, &mut f)?;
    f.flush()?;
    if args.export_codebooks {
        for &n in &config.block_lengths {
            let name = format!("codebook_n{n}.wncb");
            let coded = coded_modulator(&config, n).map_err(classify)?;
            let mut f = create_file(&args.out, &name)?;
            coded.codebook().write_to(&mut f).map_err(classify)?;
            outputs.push(name);
        }
    }
    write_manifest(&args.out, "simulate", &config, started, outputs)?;

    if global.json {
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &output.summary)?;
        writeln!(out)?;
    } else {
        write_summary_csv(&output.summary, io::stdout().lock())?;
    }
    if let Some((n, probe)) = output.first_all_outage() {
        return Err(classify(Error::AllOutage { n, probe }));
    }
    Ok(())
}

fn cmd_sweep(global: &Global, args: SweepArgs) -> Result<()> {
    let started = unix_ms();
    let config = load_config(&args.config, global)?;
    let result = snr_sweep(&config, &args.gammas).map_err(classify)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut f = create_file(dir, "sweep.csv")?;
        write_sweep_csv(&result.rows, &mut f)?;
        f.flush()?;
        write_manifest(dir, "sweep", &config, started, vec!["sweep.csv".into()])?;
    }
    let mut out = io::stdout().lock();
    if global.json {
        serde_json::to_writer_pretty(&mut out, &result)?;
        writeln!(out)?;
    } else {
        write_sweep_csv(&result.rows, &mut out)?;
    }
    Ok(())
}

fn cmd_converse(global: &Global, args: ConverseArgs) -> Result<()> {
    let started = unix_ms();
    let config = load_config(&args.config, global)?;
    let checks = converse_check(&config, args.delta).map_err(classify)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut f = create_file(dir, "converse.csv")?;
        write_converse_csv(&checks, &mut f)?;
        f.flush()?;
        write_manifest(dir, "converse", &config, started, vec!["converse.csv".into()])?;
    }
    let mut out = io::stdout().lock();
    if global.json {
        serde_json::to_writer_pretty(&mut out, &checks)?;
        writeln!(out)?;
    } else {
        write_converse_csv(&checks, &mut out)?;
    }
    if let Some(c) = checks.iter().find(|c| !c.satisfied) {
        return Err(exit(
            EXIT_CONVERSE,
            format!(
                "converse violated at n = {}: measured {} < bound {}",
                c.n,
                fmt_f64(c.measured_sup_cost),
                fmt_f64(c.bound)
            ),
        ));
    }
    Ok(())
}
