use std::time::Instant;

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, RowSelection};
use super::report::{
    to_db, AlgorithmCurve, CurvePoint, ExperimentReport, ResolvedSettings, AMP_INITIALIZATION,
    MSE_DEFINITION, PADDING_RULE, SCHEMA_VERSION,
};
use crate::amp::{run_amp, AmpConfig};
use crate::error::{Error, Result};
use crate::model::{
    sample_noise, sample_signal_with, BernoulliGaussianPrior, IidGaussianOperator,
    PartialDftOperator, ProblemInstance,
};
use crate::rng::{shared_stream, substream, Purpose};
use crate::state_evolution::{se_amp, se_tsr, SeParams, SeTrajectory};
use crate::trace::RecoveryTrace;
use crate::tsr::{run_tsr, TsrConfig};

struct TrialResult {
    /// Per-iteration MSE, padded to `t_max`.
    mse: Vec<f64>,
    clamp_events: usize,
}

type TrialOutcome = Vec<std::result::Result<TrialResult, String>>;

fn padded(trace: &RecoveryTrace, t_max: usize) -> TrialResult {
    let mut mse = trace.mse();
    let last = *mse.last().expect("at least one iteration");
    mse.resize(t_max, last);
    TrialResult {
        mse,
        clamp_events: trace.clamp_events(),
    }
}

struct Setup {
    config: ExperimentConfig,
    prior: BernoulliGaussianPrior,
    n: usize,
    m: usize,
    sigma2: f64,
    fixed_rows: Option<PartialDftOperator>,
}

impl Setup {
    fn dft_operator(&self, trial: u64) -> Result<PartialDftOperator> {
        match &self.fixed_rows {
            Some(op) => Ok(op.clone()),
            None => PartialDftOperator::random(
                self.n,
                self.m,
                &mut substream(self.config.master_seed, trial, Purpose::Rows),
            ),
        }
    }

    fn run_trial(&self, trial: u64) -> Result<TrialOutcome> {
        let seed = self.config.master_seed;
        let x = sample_signal_with(
            &self.prior,
            self.n,
            &mut substream(seed, trial, Purpose::Signal),
        )?;
        let noise = sample_noise(
            self.m,
            self.sigma2,
            &mut substream(seed, trial, Purpose::Noise),
        )?;
        let needs_dft = self
            .config
            .algorithms
            .iter()
            .any(|a| matches!(a, Algorithm::TsrDft | Algorithm::AmpDft));
        let dft_instance = if needs_dft {
            Some(ProblemInstance::from_parts(
                x.clone(),
                &noise,
                self.dft_operator(trial)?.into(),
                self.sigma2,
                seed,
            )?)
        } else {
            None
        };

        let t_max = self.config.t_max;
        let tsr_cfg = TsrConfig {
            t_max,
            rel_tol: self.config.rel_tol,
            ..TsrConfig::default()
        };
        let amp_cfg = AmpConfig {
            t_max,
            rel_tol: self.config.rel_tol,
            ..AmpConfig::default()
        };

        let mut out = Vec::with_capacity(self.config.algorithms.len());
        for &alg in &self.config.algorithms {
            let result = match alg {
                Algorithm::TsrDft => run_tsr(
                    dft_instance.as_ref().expect("dft instance"),
                    &self.prior,
                    &tsr_cfg,
                ),
                Algorithm::AmpDft => run_amp(
                    dft_instance.as_ref().expect("dft instance"),
                    &self.prior,
                    &amp_cfg,
                ),
                Algorithm::AmpIid => {
                    let op = IidGaussianOperator::sample(
                        self.m,
                        self.n,
                        &mut substream(seed, trial, Purpose::IidMatrix),
                    )?;
                    let inst = if self.config.shared_instances {
                        ProblemInstance::from_parts(
                            x.clone(),
                            &noise,
                            op.into(),
                            self.sigma2,
                            seed,
                        )?
                    } else {
                        let x = sample_signal_with(
                            &self.prior,
                            self.n,
                            &mut substream(seed, trial, Purpose::IndependentSignal),
                        )?;
                        let noise = sample_noise(
                            self.m,
                            self.sigma2,
                            &mut substream(seed, trial, Purpose::IndependentNoise),
                        )?;
                        ProblemInstance::from_parts(x, &noise, op.into(), self.sigma2, seed)?
                    };
                    run_amp(&inst, &self.prior, &amp_cfg)
                }
            };
            out.push(
                result
                    .map(|trace| padded(&trace, t_max))
                    .map_err(|e| format!("trial {trial}, {alg}: {e}")),
            );
        }
        Ok(out)
    }
}

/// State-evolution prediction for the algorithms that have one.
fn se_prediction(alg: Algorithm, params: Option<&SeParams>) -> Result<Option<SeTrajectory>> {
    let Some(params) = params else {
        return Ok(None);
    };
    match alg {
        Algorithm::TsrDft => se_tsr(params).map(Some),
        Algorithm::AmpIid => se_amp(params).map(Some),
        Algorithm::AmpDft => Ok(None),
    }
}

/// Runs every trial, then folds the results in trial order so the report
/// does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let prior = config.prior()?;
    let n = config.n;
    let m = config.resolved_m()?;
    let sigma2 = config.resolved_sigma2()?;
    let fixed_rows = match config.row_selection {
        RowSelection::Fixed => Some(PartialDftOperator::random(
            n,
            m,
            &mut shared_stream(config.master_seed, Purpose::Rows),
        )?),
        RowSelection::PerTrial => None,
    };
    let setup = Setup {
        config: config.clone(),
        prior,
        n,
        m,
        sigma2,
        fixed_rows,
    };

    let outcomes: Vec<Result<TrialOutcome>> = if config.parallel {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| setup.run_trial(t))
            .collect()
    } else {
        (0..config.trials as u64)
            .map(|t| setup.run_trial(t))
            .collect()
    };
    let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let se_params = if m < n {
        Some(SeParams {
            t_max: config.t_max.max(500),
            ..SeParams::new(n, m, sigma2, prior)?
        })
    } else {
        None
    };

    let mut curves = Vec::with_capacity(config.algorithms.len());
    for (k, &alg) in config.algorithms.iter().enumerate() {
        let mut linear_sums = vec![0.0; config.t_max];
        let mut db_sums = vec![0.0; config.t_max];
        let mut db_sq_sums = vec![0.0; config.t_max];
        let mut completed = 0usize;
        let mut clamp_events = 0usize;
        let mut failures = Vec::new();
        for outcome in &outcomes {
            match &outcome[k] {
                Ok(r) => {
                    completed += 1;
                    clamp_events += r.clamp_events;
                    for (i, &v) in r.mse.iter().enumerate() {
                        let db = to_db(v);
                        linear_sums[i] += v;
                        db_sums[i] += db;
                        db_sq_sums[i] += db * db;
                    }
                }
                Err(msg) => failures.push(msg.clone()),
            }
        }
        if failures.len() * 100 > config.trials || completed == 0 {
            return Err(Error::TooManyFailures {
                failed: failures.len(),
                trials: config.trials,
                first: failures.first().cloned().unwrap_or_default(),
            });
        }

        let se = se_prediction(alg, se_params.as_ref())?;
        let k_f = completed as f64;
        let points = (0..config.t_max)
            .map(|i| {
                let mean_db = db_sums[i] / k_f;
                let var = if completed > 1 {
                    ((db_sq_sums[i] - k_f * mean_db * mean_db) / (k_f - 1.0)).max(0.0)
                } else {
                    0.0
                };
                CurvePoint {
                    iteration: i + 1,
                    mean_mse: linear_sums[i] / k_f,
                    mean_mse_db: mean_db,
                    stderr_db: (var / k_f).sqrt(),
                    se_pred_mse_db: se.as_ref().map(|s| to_db(s.predicted_mse(i + 1))),
                }
            })
            .collect();
        curves.push(AlgorithmCurve {
            algorithm: alg,
            points,
            completed_trials: completed,
            failed_trials: failures.len(),
            clamp_events,
        });
    }

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        resolved: ResolvedSettings {
            n,
            m,
            sigma2,
            lambda: config.lambda,
        },
        mse_definition: MSE_DEFINITION.into(),
        amp_initialization: AMP_INITIALIZATION.into(),
        padding_rule: PADDING_RULE.into(),
        curves,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
