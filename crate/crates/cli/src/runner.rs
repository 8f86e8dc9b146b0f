//! Dispatches a resolved scenario to the quantum or classical pipeline and
//! writes the CSV/JSON reports.

use crate::config::{
    ConfigError, OutputFormat, ProtocolConfig, ResolvedScenario, ScenarioConfig,
};
use lgsim_core::lg::{self, LGReport};
use lgsim_core::macroreal::{self, EmpiricalLgReport};
use serde::Serialize;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn runtime(e: impl fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

/// One output row; stderr fields are present only for Monte Carlo runs.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub tau: f64,
    #[serde(rename = "C12")]
    pub c12: f64,
    #[serde(rename = "C23")]
    pub c23: f64,
    #[serde(rename = "C13")]
    pub c13: f64,
    pub delta0: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub mod_lower_margin: f64,
    pub mod_upper_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<RowStderr>,
    pub flag: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RowStderr {
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub delta0: f64,
    pub margin: f64,
    pub mod_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta0Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub protocol: String,
    pub seed: u64,
    pub rows: usize,
    pub max_violation: f64,
    pub argmax_tau: Option<f64>,
    pub delta0_stats: Delta0Stats,
}

pub struct RunOutcome {
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

/// Runs a parsed config end to end and writes the requested reports.
pub fn run(config: &ScenarioConfig) -> Result<RunOutcome, RunError> {
    let resolved = config.resolve()?;
    let rows = match &resolved.classical {
        Some(model) => classical_rows(&resolved, model)?,
        None => quantum_rows(&resolved)?,
    };

    let summary = summarize(&resolved, &rows);
    let out_dir = &resolved.output.path;
    fs::create_dir_all(out_dir).map_err(runtime)?;

    let classical = resolved.classical.is_some();
    let mut csv_path = None;
    let mut json_path = None;
    if matches!(resolved.output.format, OutputFormat::Csv | OutputFormat::Both) {
        let path = out_dir.join("report.csv");
        write_csv(&path, &rows, classical)?;
        csv_path = Some(path);
    }
    if matches!(resolved.output.format, OutputFormat::Json | OutputFormat::Both) {
        let path = out_dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary).map_err(runtime)?;
        fs::write(&path, text + "\n").map_err(runtime)?;
        json_path = Some(path);
    }

    Ok(RunOutcome {
        rows,
        summary,
        csv_path,
        json_path,
    })
}

fn protocol_name(protocol: &ProtocolConfig) -> String {
    match protocol {
        ProtocolConfig::Sequential => "sequential".into(),
        ProtocolConfig::Quasi => "quasi".into(),
        ProtocolConfig::AncillaSimple => "ancilla_simple".into(),
        ProtocolConfig::AncillaGeneral { .. } => "ancilla_general".into(),
        ProtocolConfig::Record => "record".into(),
        ProtocolConfig::Classical { .. } => "classical".into(),
    }
}

fn quantum_rows(resolved: &ResolvedScenario) -> Result<Vec<Row>, RunError> {
    let system = resolved
        .quantum
        .as_ref()
        .expect("quantum system resolved for quantum protocols");

    let reports: Vec<(f64, LGReport)> = if let Some((t2, t3)) = resolved.explicit {
        let scenario = lg::LGScenario::new(
            system.q.clone(),
            system.h.clone(),
            (resolved.t1, t2, t3),
            system.state.clone(),
            [system.pair_protocol; 3],
        )
        .map_err(runtime)?;
        vec![(
            t2 - resolved.t1,
            lg::evaluate_scenario(&scenario).map_err(runtime)?,
        )]
    } else {
        let scan = lg::violation_scan(
            &system.q,
            &system.h,
            &system.state,
            system.pair_protocol,
            resolved.t1,
            &resolved.taus,
        )
        .map_err(runtime)?;
        scan.rows.into_iter().map(|r| (r.tau, r.report)).collect()
    };

    Ok(reports
        .into_iter()
        .map(|(tau, report)| Row {
            tau,
            c12: report.c12,
            c23: report.c23,
            c13: report.c13,
            delta0: report.delta0,
            lower_margin: report.margins.lower,
            upper_margin: report.margins.upper,
            mod_lower_margin: report.modified_margins.lower,
            mod_upper_margin: report.modified_margins.upper,
            stderr: None,
            flag: report.flags.join("; "),
        })
        .collect())
}

fn classical_rows(
    resolved: &ResolvedScenario,
    model: &macroreal::HiddenModel,
) -> Result<Vec<Row>, RunError> {
    use rayon::prelude::*;
    resolved
        .taus
        .par_iter()
        .enumerate()
        .map(|(index, &tau)| {
            let (t1, t2, t3) = match resolved.explicit {
                Some((t2, t3)) => (resolved.t1, t2, t3),
                None => (resolved.t1, resolved.t1 + tau, resolved.t1 + 2.0 * tau),
            };
            if !(t1 < t2 && t2 < t3) {
                return Ok(empty_classical_row(tau, "degenerate times (τ = 0)"));
            }
            // Per-row seed keeps rows statistically independent and the
            // output invariant under scheduling.
            let seed = macroreal::derive_seed(resolved.seed, 1000 + index as u64);
            let report = macroreal::lg_suite(model, t1, t2, t3, resolved.runs, seed)
                .map_err(runtime)?;
            Ok(classical_row(tau, &report))
        })
        .collect()
}

fn classical_row(tau: f64, report: &EmpiricalLgReport) -> Row {
    Row {
        tau,
        c12: report.c12.value,
        c23: report.c23.value,
        c13: report.c13.value,
        delta0: report.delta0,
        lower_margin: report.margins.lower,
        upper_margin: report.margins.upper,
        mod_lower_margin: report.modified_margins.lower,
        mod_upper_margin: report.modified_margins.upper,
        stderr: Some(RowStderr {
            c12: report.c12.stderr,
            c23: report.c23.stderr,
            c13: report.c13.stderr,
            delta0: report.delta0_stderr,
            margin: report.margins_stderr,
            mod_margin: report.modified_margins_stderr,
        }),
        flag: String::new(),
    }
}

fn empty_classical_row(tau: f64, flag: &str) -> Row {
    Row {
        tau,
        c12: f64::NAN,
        c23: f64::NAN,
        c13: f64::NAN,
        delta0: f64::NAN,
        lower_margin: f64::NAN,
        upper_margin: f64::NAN,
        mod_lower_margin: f64::NAN,
        mod_upper_margin: f64::NAN,
        stderr: None,
        flag: flag.into(),
    }
}

fn summarize(resolved: &ResolvedScenario, rows: &[Row]) -> Summary {
    let mut max_violation = 0.0f64;
    let mut argmax_tau = None;
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    let mut d_sum = 0.0;
    let mut d_count = 0usize;
    for row in rows {
        let violation = (-row.lower_margin).max(-row.upper_margin).max(0.0);
        if violation.is_finite() && violation > max_violation {
            max_violation = violation;
            argmax_tau = Some(row.tau);
        }
        if row.delta0.is_finite() {
            d_min = d_min.min(row.delta0);
            d_max = d_max.max(row.delta0);
            d_sum += row.delta0;
            d_count += 1;
        }
    }
    let delta0_stats = if d_count > 0 {
        Delta0Stats {
            min: d_min,
            max: d_max,
            mean: d_sum / d_count as f64,
        }
    } else {
        Delta0Stats {
            min: f64::NAN,
            max: f64::NAN,
            mean: f64::NAN,
        }
    };
    Summary {
        protocol: protocol_name(&resolved.protocol),
        seed: resolved.seed,
        rows: rows.len(),
        max_violation,
        argmax_tau,
        delta0_stats,
    }
}

/// 12 significant digits, stable across runs.
fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

fn write_csv(path: &PathBuf, rows: &[Row], classical: bool) -> Result<(), RunError> {
    let mut file = fs::File::create(path).map_err(runtime)?;
    let mut header = String::from(
        "tau,C12,C23,C13,delta0,lower_margin,upper_margin,mod_lower_margin,mod_upper_margin",
    );
    if classical {
        header.push_str(
            ",C12_stderr,C23_stderr,C13_stderr,delta0_stderr,margin_stderr,mod_margin_stderr",
        );
    }
    header.push_str(",flag");
    writeln!(file, "{header}").map_err(runtime)?;
    for row in rows {
        let mut fields = vec![
            fmt_sig(row.tau),
            fmt_sig(row.c12),
            fmt_sig(row.c23),
            fmt_sig(row.c13),
            fmt_sig(row.delta0),
            fmt_sig(row.lower_margin),
            fmt_sig(row.upper_margin),
            fmt_sig(row.mod_lower_margin),
            fmt_sig(row.mod_upper_margin),
        ];
        if classical {
            match &row.stderr {
                Some(se) => {
                    fields.extend([
                        fmt_sig(se.c12),
                        fmt_sig(se.c23),
                        fmt_sig(se.c13),
                        fmt_sig(se.delta0),
                        fmt_sig(se.margin),
                        fmt_sig(se.mod_margin),
                    ]);
                }
                None => fields.extend(std::iter::repeat_n("NaN".to_string(), 6)),
            }
        }
        fields.push(row.flag.clone());
        writeln!(file, "{}", fields.join(",")).map_err(runtime)?;
    }
    Ok(())
}
