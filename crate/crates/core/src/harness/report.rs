use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const MSE_DEFINITION: &str =
    "per trial 10 log10(||x_hat - x_true||^2 / N) on the a posteriori estimate; mean_mse_db averages these over trials, mean_mse is the linear average";
pub const AMP_INITIALIZATION: &str = "x_hat_0 = 0, r_-1 = 0";
pub const PADDING_RULE: &str =
    "trials stopping before t_max contribute their final MSE to later iterations";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    /// Average of the per-trial MSE on a linear scale.
    pub mean_mse: f64,
    /// Average of the per-trial MSE in dB.
    pub mean_mse_db: f64,
    /// Standard error of `mean_mse_db`.
    pub stderr_db: f64,
    pub se_pred_mse_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmCurve {
    pub algorithm: Algorithm,
    pub points: Vec<CurvePoint>,
    pub completed_trials: usize,
    pub failed_trials: usize,
    pub clamp_events: usize,
}

/// Resolved values of the derived settings, echoed beside the raw config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSettings {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub resolved: ResolvedSettings,
    pub mse_definition: String,
    pub amp_initialization: String,
    pub padding_rule: String,
    pub curves: Vec<AlgorithmCurve>,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn curve(&self, algorithm: Algorithm) -> Option<&AlgorithmCurve> {
        self.curves.iter().find(|c| c.algorithm == algorithm)
    }

    /// The report with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }
}

/// `10 log10(x)`, floored so an exact zero stays finite.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.max(f64::MIN_POSITIVE).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    algorithm: &'a str,
    iteration: usize,
    mean_mse_db: f64,
    stderr_db: f64,
    se_pred_mse_db: Option<f64>,
}

pub const CSV_HEADER: [&str; 5] = [
    "algorithm",
    "iteration",
    "mean_mse_db",
    "stderr_db",
    "se_pred_mse_db",
];

pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for curve in &report.curves {
        for p in &curve.points {
            w.serialize(CsvRow {
                algorithm: curve.algorithm.name(),
                iteration: p.iteration,
                mean_mse_db: p.mean_mse_db,
                stderr_db: p.stderr_db,
                se_pred_mse_db: p.se_pred_mse_db,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

pub fn to_csv_string(report: &ExperimentReport) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Writes `report` to `path` in the requested format.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(report, file),
        ReportFormat::Json => write_json(report, file),
    }
}

pub fn read_json_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}
