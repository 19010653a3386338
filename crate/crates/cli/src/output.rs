//! Report and trace emission: per-step JSON ledger, summary JSON, CSV
//! traces, optional field dumps. Everything is struct-ordered serde output,
//! so identical runs reproduce byte-identical files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use vortex_core::estimates::{empirical_c0, EstimateReport};
use vortex_core::geometry::SurfaceGrid;
use vortex_core::solver::SolverState;

#[derive(Serialize)]
pub struct StepRecord<'a> {
    pub step: usize,
    pub alpha: f64,
    pub t: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub report: &'a EstimateReport,
}

#[derive(Serialize)]
pub struct RunSummary {
    pub states: usize,
    pub empirical_c0_lower: f64,
    pub empirical_c0_upper: f64,
    pub max_s_overall: f64,
    pub worst_degree_error: f64,
    pub all_monitors_pass: bool,
}

pub fn summarize(states: &[SolverState]) -> RunSummary {
    let (lower, upper) = empirical_c0(states);
    RunSummary {
        states: states.len(),
        empirical_c0_lower: lower,
        empirical_c0_upper: upper,
        max_s_overall: states
            .iter()
            .map(|s| s.report.observed.max_s)
            .fold(f64::NEG_INFINITY, f64::max),
        worst_degree_error: states
            .iter()
            .map(|s| s.report.observed.degree_error)
            .fold(0.0, f64::max),
        all_monitors_pass: states.iter().all(|s| s.report.all_pass()),
    }
}

/// Write ledger.jsonl, summary.json, trace.csv and (optionally) per-step
/// psi dumps under `out`.
pub fn emit_report(
    out: &Path,
    grid: &SurfaceGrid,
    states: &[SolverState],
    emit_fields: bool,
) -> Result<RunSummary> {
    if states.is_empty() {
        bail!("cannot emit a report for an empty state list");
    }
    fs::create_dir_all(out).with_context(|| format!("creating output directory {out:?}"))?;

    let mut ledger = String::new();
    for (i, st) in states.iter().enumerate() {
        let rec = StepRecord {
            step: i,
            alpha: st.path_position.0,
            t: st.path_position.1,
            newton_iters: st.newton_iters,
            residual_norm: st.residual_norm,
            report: &st.report,
        };
        ledger.push_str(&serde_json::to_string(&rec)?);
        ledger.push('\n');
    }
    fs::write(out.join("ledger.jsonl"), ledger)?;

    let mut trace = String::from(
        "step,alpha,t,newton_iters,residual_norm,max_s,min_psi,max_psi,degree_error,denom_min\n",
    );
    for (i, st) in states.iter().enumerate() {
        let o = &st.report.observed;
        trace.push_str(&format!(
            "{i},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            st.path_position.0,
            st.path_position.1,
            st.newton_iters,
            st.residual_norm,
            o.max_s,
            o.min_psi,
            o.max_psi,
            o.degree_error,
            o.denom_min
        ));
    }
    fs::write(out.join("trace.csv"), trace)?;

    if emit_fields {
        for (i, st) in states.iter().enumerate() {
            let csv = st.psi.to_csv(grid)?;
            fs::write(out.join(format!("psi_{i:04}.csv")), csv)?;
        }
    }

    let summary = summarize(states);
    fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// One identity-suite entry of the `checks` subcommand.
#[derive(Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}
