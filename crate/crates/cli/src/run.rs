//! Executes a validated [`Plan`] and writes its CSV table and JSON report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ddkit::classicalnoise::{chi, comparison_csv_header, comparison_csv_row, mc_coherence};
use ddkit::finitebath::{error_metrics_with, ErrorMetrics, FreeEvolution};
use ddkit::format::sig17;
use ddkit::orderfit::{fit_order, OrderFitResult};
use ddkit::spinboson::coherence_deficit;
use ddkit::stateprotect::{protected_propagator_with, protection_error, ProtectionError};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{metric_columns, Engine, ExperimentConfig, FitMode, Instance, Plan};
use crate::family::Family;
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One engine's sweep: formatted rows plus the numeric columns named by
/// [`metric_columns`].
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, engine: Engine, name: &str) -> Option<Vec<f64>> {
        let idx = metric_columns(engine).iter().position(|c| *c == name)?;
        Some(self.values.iter().map(|r| r[idx]).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub engine: Engine,
    pub sequence: String,
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub window: [f64; 2],
    pub valid: bool,
    pub low_confidence: bool,
    pub claimed_order: f64,
    pub tolerance: f64,
    pub mode: FitMode,
    pub pass: bool,
}

pub struct Outcome {
    pub table: Table,
    pub report: Option<Report>,
    pub csv_path: PathBuf,
    pub report_path: Option<PathBuf>,
}

impl Outcome {
    /// `true` unless a fit was requested and missed its band.
    pub fn pass(&self) -> bool {
        self.report.as_ref().is_none_or(|r| r.pass)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn numeric(e: ddkit::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Runs every sweep point; rows come back in sweep order whatever the thread count.
pub fn execute(plan: &Plan) -> Result<Table, CliError> {
    let points: Vec<(f64, &ddkit::PulseSequence)> = plan.times.iter().copied().zip(&plan.sequences).collect();
    let (header, rows): (&'static str, Vec<(String, Vec<f64>)>) = match &plan.instance {
        Instance::SpinBoson(modes) => (
            "T,coherence,deficit",
            points
                .par_iter()
                .map(|&(t, seq)| {
                    let d = coherence_deficit(modes, seq)?;
                    let l = 1.0 - d;
                    Ok((format!("{},{},{}", sig17(t), sig17(l), sig17(d)), vec![t, l, d]))
                })
                .collect::<ddkit::Result<_>>()
                .map_err(numeric)?,
        ),
        Instance::FiniteBath(h) => {
            let free = FreeEvolution::new(h).map_err(numeric)?;
            (
                ErrorMetrics::csv_header(),
                points
                    .par_iter()
                    .map(|&(t, seq)| {
                        let m = error_metrics_with(&free, seq)?;
                        let v = vec![
                            t,
                            m.dephasing_error,
                            m.relaxation_error,
                            m.generator_dephasing,
                            m.generator_relaxation,
                        ];
                        Ok((m.csv_row(t), v))
                    })
                    .collect::<ddkit::Result<_>>()
                    .map_err(numeric)?,
            )
        }
        Instance::Noise {
            spectrum,
            realizations,
        } => (
            comparison_csv_header(),
            // Every sweep point reuses the same seed (common random numbers).
            points
                .par_iter()
                .map(|&(t, seq)| {
                    let c = chi(spectrum, seq)?;
                    let mc = mc_coherence(spectrum, seq, *realizations, plan.seed)?;
                    let v = vec![seq.len() as f64, t, c, mc.coherence, mc.stderr];
                    Ok((comparison_csv_row(seq, c, &mc), v))
                })
                .collect::<ddkit::Result<_>>()
                .map_err(numeric)?,
        ),
        Instance::Protect { system, final_pulse } => {
            let n = if plan.sequence.family == Family::Free {
                0
            } else {
                plan.sequence.n
            };
            (
                ProtectionError::csv_header(),
                points
                    .par_iter()
                    .map(|&(t, _)| {
                        let u = protected_propagator_with(system, n, t, *final_pulse)?;
                        let e = protection_error(system, &u)?;
                        Ok((e.csv_row(t), vec![t, e.commutator, e.leakage]))
                    })
                    .collect::<ddkit::Result<_>>()
                    .map_err(numeric)?,
            )
        }
    };
    let (rows, values) = rows.into_iter().unzip();
    Ok(Table { header, rows, values })
}

fn provenance(plan: &Plan) -> Provenance {
    Provenance {
        tool: "ddkit",
        version: TOOL_VERSION,
        config_sha256: plan.config_sha256.clone(),
        seed: plan.seed,
    }
}

pub fn render_csv(plan: &Plan, table: &Table) -> String {
    let p = provenance(plan);
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", p.tool, p.version);
    let _ = writeln!(out, "# config_sha256 {}", p.config_sha256);
    let _ = writeln!(out, "# seed {}", p.seed);
    let label = plan.sequences.first().map_or("", |s| s.label());
    let _ = writeln!(out, "# engine {} sequence {label}", plan.engine.name());
    out.push_str(table.header);
    out.push('\n');
    for row in &table.rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

pub fn build_report(plan: &Plan, table: &Table) -> Result<Option<Report>, CliError> {
    let Some(fit) = &plan.fit else { return Ok(None) };
    let x = table
        .column(plan.engine, "T")
        .expect("every engine has a T column");
    let y = table.column(plan.engine, &fit.metric).expect("metric validated");
    let pairs: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    let r: OrderFitResult = fit_order(&pairs, fit.floor, fit.ceiling).map_err(numeric)?;
    Ok(Some(Report {
        provenance: provenance(plan),
        engine: plan.engine,
        sequence: plan
            .sequences
            .first()
            .map_or(String::new(), |s| s.label().to_string()),
        metric: fit.metric.clone(),
        slope: r.slope,
        intercept: r.intercept,
        r_squared: r.r_squared,
        points_used: r.points_used,
        window: [r.window.0, r.window.1],
        valid: r.valid,
        low_confidence: r.low_confidence(),
        claimed_order: fit.claimed_order,
        tolerance: fit.tolerance,
        mode: fit.mode,
        pass: r.valid && fit.passes(r.slope),
    }))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Numeric(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))
}

/// Loads, validates, runs and writes one experiment. Outputs are written only
/// after every computation has succeeded, and removed again if writing fails.
pub fn run_config(path: &Path, seed: Option<u64>) -> Result<Outcome, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Usage("config is not UTF-8".into()))?;
    let mut config = ExperimentConfig::parse(text)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let plan = config.plan(base, sha256_hex(&bytes))?;
    let table = execute(&plan)?;
    let report = build_report(&plan, &table)?;

    let csv = render_csv(&plan, &table);
    let json = report
        .as_ref()
        .map(|r| serde_json::to_string_pretty(r).map(|s| s + "\n"))
        .transpose()
        .map_err(|e| CliError::Numeric(e.to_string()))?;

    let written = write_file(&plan.csv_path, &csv).and_then(|_| match (&plan.report_path, &json) {
        (Some(p), Some(j)) => write_file(p, j),
        _ => Ok(()),
    });
    if let Err(e) = written {
        let _ = fs::remove_file(&plan.csv_path);
        if let Some(p) = &plan.report_path {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(Outcome {
        table,
        report,
        csv_path: plan.csv_path,
        report_path: plan.report_path,
    })
}
