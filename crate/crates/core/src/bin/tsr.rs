use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tsr_core::amp::{run_amp, AmpConfig};
use tsr_core::harness::report::{to_db, write_csv, write_json, SCHEMA_VERSION};
use tsr_core::harness::{
    run_experiment, run_property_suite, Algorithm, ExperimentConfig, PropertyGrid, ReportFormat,
    RowSelection,
};
use tsr_core::model::{
    sample_noise, sample_signal_with, IidGaussianOperator, PartialDftOperator, ProblemInstance,
};
use tsr_core::rng::{substream, Purpose};
use tsr_core::state_evolution::{fixed_point_residual, se_amp, se_tsr, SeParams};
use tsr_core::tsr::{run_tsr, TsrConfig};
use tsr_core::{Error, RecoveryTrace, Result};

#[derive(Parser)]
#[command(
    name = "tsr",
    version,
    about = "Turbo signal recovery and AMP experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a single instance and dump the per-iteration trace.
    Recover(CommonArgs),
    /// Monte Carlo experiment with state-evolution predictions.
    Mc(CommonArgs),
    /// State-evolution trajectories only.
    Se(CommonArgs),
    /// Run the property suite; exits nonzero on any failure.
    Check(CheckArgs),
    /// Scan the fixed-point residual of the converged TSR recursion over M/N.
    FixedPoint(FixedPointArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "m_over_n")]
    m: Option<usize>,
    #[arg(long)]
    m_over_n: Option<f64>,
    /// Sparsity of the Bernoulli-Gaussian prior.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "sigma2")]
    snr_db: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Comma-separated subset of tsr-dft, amp-iid, amp-dft.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    row_selection: Option<RowSelection>,
    /// Draw independent signals and noise for the IID instances.
    #[arg(long)]
    independent_instances: bool,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
}

#[derive(Args)]
struct CheckArgs {
    /// TOML property grid; defaults cover the standard sweep.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixedPointArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated M/N values to scan.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    ratios: Vec<f64>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(m) = self.m {
            cfg.set_m(m);
        }
        if let Some(r) = self.m_over_n {
            cfg.set_m_over_n(r);
        }
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(s) = self.sigma2 {
            cfg.set_sigma2(s);
        }
        if let Some(db) = self.snr_db {
            cfg.set_snr_db(db);
        }
        if let Some(a) = &self.algorithms {
            cfg.algorithms = a.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(r) = self.row_selection {
            cfg.row_selection = r;
        }
        if self.independent_instances {
            cfg.shared_instances = false;
        }
        if self.serial {
            cfg.parallel = false;
        }
        if let Some(out) = &self.output.out {
            cfg.output_path = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_rows<T: Serialize>(rows: &[T], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_document<T: Serialize>(doc: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    algorithm: &'static str,
    iteration: usize,
    mse_db: f64,
    clamp_events: usize,
}

#[derive(Serialize)]
struct AlgorithmTrace {
    algorithm: Algorithm,
    trace: RecoveryTrace,
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    traces: Vec<AlgorithmTrace>,
}

fn recover(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let prior = cfg.prior()?;
    let (n, m, sigma2) = (cfg.n, cfg.resolved_m()?, cfg.resolved_sigma2()?);
    let seed = cfg.master_seed;
    let x = sample_signal_with(&prior, n, &mut substream(seed, 0, Purpose::Signal))?;
    let noise = sample_noise(m, sigma2, &mut substream(seed, 0, Purpose::Noise))?;
    let dft = PartialDftOperator::random(n, m, &mut substream(seed, 0, Purpose::Rows))?;
    let tsr_cfg = TsrConfig {
        t_max: cfg.t_max,
        rel_tol: cfg.rel_tol,
        ..TsrConfig::default()
    };
    let amp_cfg = AmpConfig {
        t_max: cfg.t_max,
        rel_tol: cfg.rel_tol,
        ..AmpConfig::default()
    };

    let mut traces = Vec::new();
    for &alg in &cfg.algorithms {
        let trace = match alg {
            Algorithm::TsrDft => {
                let inst = ProblemInstance::from_parts(
                    x.clone(),
                    &noise,
                    dft.clone().into(),
                    sigma2,
                    seed,
                )?;
                run_tsr(&inst, &prior, &tsr_cfg)?
            }
            Algorithm::AmpDft => {
                let inst = ProblemInstance::from_parts(
                    x.clone(),
                    &noise,
                    dft.clone().into(),
                    sigma2,
                    seed,
                )?;
                run_amp(&inst, &prior, &amp_cfg)?
            }
            Algorithm::AmpIid => {
                let op =
                    IidGaussianOperator::sample(m, n, &mut substream(seed, 0, Purpose::IidMatrix))?;
                let inst = ProblemInstance::from_parts(x.clone(), &noise, op.into(), sigma2, seed)?;
                run_amp(&inst, &prior, &amp_cfg)?
            }
        };
        traces.push(AlgorithmTrace {
            algorithm: alg,
            trace,
        });
    }

    let mut out = open_output(args.output.out.as_deref())?;
    match args.output.format {
        ReportFormat::Csv => {
            let rows: Vec<TraceRow> = traces
                .iter()
                .flat_map(|t| {
                    t.trace.records.iter().map(|r| TraceRow {
                        algorithm: t.algorithm.name(),
                        iteration: r.iteration,
                        mse_db: to_db(r.mse),
                        clamp_events: r.clamp_events,
                    })
                })
                .collect();
            write_rows(&rows, &mut out)
        }
        ReportFormat::Json => write_document(
            &TraceDocument {
                schema_version: SCHEMA_VERSION,
                config: &cfg,
                traces,
            },
            &mut out,
        ),
    }
}

fn mc(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let report = run_experiment(&cfg)?;
    for c in &report.curves {
        if c.failed_trials > 0 {
            eprintln!(
                "{}: {} failed trials excluded",
                c.algorithm, c.failed_trials
            );
        }
    }
    let out = open_output(args.output.out.as_deref())?;
    match args.output.format {
        ReportFormat::Csv => write_csv(&report, out),
        ReportFormat::Json => write_json(&report, out),
    }
}

#[derive(Serialize)]
struct SeRow {
    algorithm: &'static str,
    iteration: usize,
    v: f64,
    eta: f64,
    predicted_mse_db: f64,
}

#[derive(Serialize)]
struct SeDocument<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    rows: Vec<SeRow>,
}

fn se_params(cfg: &ExperimentConfig) -> Result<SeParams> {
    Ok(SeParams {
        t_max: cfg.t_max,
        ..SeParams::new(
            cfg.n,
            cfg.resolved_m()?,
            cfg.resolved_sigma2()?,
            cfg.prior()?,
        )?
    })
}

fn se(args: &CommonArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let params = se_params(&cfg)?;
    let mut rows = Vec::new();
    for &alg in &cfg.algorithms {
        let traj = match alg {
            Algorithm::TsrDft => se_tsr(&params)?,
            Algorithm::AmpIid => se_amp(&params)?,
            Algorithm::AmpDft => {
                eprintln!("amp-dft has no state evolution; skipped");
                continue;
            }
        };
        rows.extend(traj.points.iter().enumerate().map(|(t, p)| SeRow {
            algorithm: alg.name(),
            iteration: t + 1,
            v: p.v,
            eta: p.eta_next,
            predicted_mse_db: to_db(p.mmse_next),
        }));
    }
    let mut out = open_output(args.output.out.as_deref())?;
    match args.output.format {
        ReportFormat::Csv => write_rows(&rows, &mut out),
        ReportFormat::Json => write_document(
            &SeDocument {
                schema_version: SCHEMA_VERSION,
                config: &cfg,
                rows,
            },
            &mut out,
        ),
    }
}

fn check(args: &CheckArgs) -> Result<bool> {
    let grid = match &args.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => PropertyGrid::default(),
    };
    let report = run_property_suite(&grid)?;
    for o in &report.outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        if o.passed {
            println!("{status} {} [{}]", o.kind.name(), o.point);
        } else {
            println!("{status} {} [{}]: {}", o.kind.name(), o.point, o.detail);
        }
    }
    if let Some(path) = &args.out {
        write_document(&report, &mut open_output(Some(path))?)?;
    }
    let failed = report.failures().count();
    println!("{} checks, {} failed", report.outcomes.len(), failed);
    Ok(failed == 0)
}

#[derive(Serialize)]
struct FixedPointRow {
    m_over_n: f64,
    m: usize,
    converged: bool,
    exact_recovery: bool,
    iterations: usize,
    eta_inf: f64,
    residual: Option<f64>,
    converged_mse_db: f64,
}

fn fixed_point(args: &FixedPointArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let (n, sigma2, prior) = (cfg.n, cfg.resolved_sigma2()?, cfg.prior()?);
    let mut rows = Vec::new();
    for &r in &args.ratios {
        let m = (r * n as f64).round() as usize;
        let params = SeParams::new(n, m, sigma2, prior)?;
        let traj = se_tsr(&params)?;
        let residual = if traj.exact_recovery {
            None
        } else {
            Some(fixed_point_residual(traj.fixed_point_eta, &params)?)
        };
        rows.push(FixedPointRow {
            m_over_n: r,
            m,
            converged: traj.converged,
            exact_recovery: traj.exact_recovery,
            iterations: traj.points.len(),
            eta_inf: traj.fixed_point_eta,
            residual,
            converged_mse_db: to_db(traj.converged_mse()),
        });
    }
    let mut out = open_output(args.common.output.out.as_deref())?;
    match args.common.output.format {
        ReportFormat::Csv => write_rows(&rows, &mut out),
        ReportFormat::Json => write_document(&rows, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Recover(a) => recover(a).map(|_| true),
        Command::Mc(a) => mc(a).map(|_| true),
        Command::Se(a) => se(a).map(|_| true),
        Command::Check(a) => check(a),
        Command::FixedPoint(a) => fixed_point(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
