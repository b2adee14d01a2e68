//! NDJSON trial logs and CSV summaries. Floats carry 17 significant digits.

use std::io::Write;

use super::{ConverseCheck, ExperimentSummary, SweepRow, TrialRecord};
use crate::report::{fmt_f64, fmt_opt};

pub const SUMMARY_CSV_HEADER: &str = "n,sup_cost,delta_n,exponent_theory,exponent_fit,converse_bound";
pub const SWEEP_CSV_HEADER: &str = "gamma,sup_cost,delta_n,exponent_theory,converse_bound";
pub const CONVERSE_CSV_HEADER: &str =
    "n,m_u,m_v,locus_length,delta_n,bound,measured_sup_cost,satisfied";

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", items.join(","))
}

/// One JSON object per line: `n, probe, u, u_hat, outage, cost, trial`.
pub fn write_trials_ndjson<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(
            out,
            r#"{{"n":{},"probe":{},"u":{},"u_hat":{},"outage":{},"cost":{},"trial":{}}}"#,
            r.n,
            r.probe,
            fmt_vec(&r.u),
            fmt_vec(&r.u_hat),
            r.outage,
            fmt_f64(r.cost),
            r.trial
        )?;
    }
    Ok(())
}

/// One row per block length; missing values are empty cells.
pub fn write_summary_csv<W: Write>(summary: &ExperimentSummary, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    let fit = summary.fit.map(|f| f.slope);
    for b in &summary.blocks {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.n,
            fmt_opt(b.sup_cost),
            fmt_f64(b.delta_n),
            fmt_opt(summary.theory_exponent),
            fmt_opt(fit),
            fmt_opt(b.converse_bound)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.gamma),
            fmt_opt(r.sup_cost),
            fmt_f64(r.delta_n),
            fmt_opt(r.exponent_theory),
            fmt_opt(r.converse_bound)
        )?;
    }
    Ok(())
}

pub fn write_converse_csv<W: Write>(checks: &[ConverseCheck], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONVERSE_CSV_HEADER}")?;
    for c in checks {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.n,
            c.grid[0],
            c.grid[1],
            fmt_f64(c.locus_length),
            fmt_f64(c.delta_n),
            fmt_f64(c.bound),
            fmt_f64(c.measured_sup_cost),
            c.satisfied
        )?;
    }
    Ok(())
}
