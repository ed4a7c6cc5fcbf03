//! AMP with the Bernoulli-Gaussian MMSE denoiser, for any sensing operator.
//!
//! The operator is normalized so columns have squared norm `M/N` (entries of
//! variance `1/N` for the Gaussian ensemble). In that scaling the recursion is
//!
//! ```text
//! r_t     = y - A x_t + (N/M) b_t r_{t-1}
//! tau2_t  = (N/M) ||r_t||^2 / M
//! q_t     = x_t + (N/M) A^H r_t
//! x_{t+1} = E[x | q_t]          (denoiser at eta = 1/tau2_t)
//! b_{t+1} = mean(var[x | q_t]) / tau2_t
//! ```
//!
//! which is the usual unit-row-variance AMP applied to `sqrt(N/M) y`.

use serde::{Deserialize, Serialize};

use crate::denoiser::AwgnObservationModel;
use crate::error::{Error, Result};
use crate::model::{mse, norm_sqr, BernoulliGaussianPrior, LinearOperator, ProblemInstance, C64};
use crate::trace::{IterationDetail, IterationRecord, RecoveryTrace, StopReason};

/// How the effective noise variance `tau2` of the pseudo-data is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TauEstimate {
    /// `(N/M) ||r||^2 / M` from the current residual.
    #[default]
    Empirical,
    /// `(N/M) (sigma2 + v)` with `v` the previous average posterior variance
    /// (1 before the first denoising step).
    StateEvolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmpConfig {
    pub t_max: usize,
    /// Stop once the relative change of the average posterior variance drops
    /// below this.
    pub rel_tol: f64,
    /// Weight of the new estimate in `(0, 1]`; 1 disables damping.
    pub damping: f64,
    /// Include the Onsager term. Only meant to be switched off in tests.
    pub onsager: bool,
    pub tau: TauEstimate,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            t_max: 50,
            rel_tol: 1e-8,
            damping: 1.0,
            onsager: true,
            tau: TauEstimate::Empirical,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::invalid("t_max", "must be at least 1"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol", "must be >= 0"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub x_hat: Vec<C64>,
    pub residual: Vec<C64>,
    pub onsager_coeff: f64,
    pub tau2: f64,
    pub iteration: usize,
}

fn ensure_finite(v: &[C64], iteration: usize, step: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, step })
    }
}

/// Runs AMP from `x_0 = 0`, `r_{-1} = 0`, recording the MSE of each new
/// estimate `x_{t+1}`.
pub fn run_amp(
    instance: &ProblemInstance,
    prior: &BernoulliGaussianPrior,
    config: &AmpConfig,
) -> Result<RecoveryTrace> {
    config.validate()?;
    let op = &instance.operator;
    let (n, m) = (op.n(), op.m());
    let ratio = n as f64 / m as f64;

    let mut state = AmpState {
        x_hat: vec![C64::new(0.0, 0.0); n],
        residual: vec![C64::new(0.0, 0.0); m],
        onsager_coeff: 0.0,
        tau2: 0.0,
        iteration: 0,
    };
    let mut last_var = 1.0;
    let mut records = Vec::with_capacity(config.t_max);
    let mut prev_mean_var: Option<f64> = None;
    let mut stop_reason = StopReason::MaxIterations;

    for t in 1..=config.t_max {
        let ax = op.forward(&state.x_hat)?;
        let memory = if config.onsager {
            ratio * state.onsager_coeff
        } else {
            0.0
        };
        let residual: Vec<C64> = instance
            .y
            .iter()
            .zip(&ax)
            .zip(&state.residual)
            .map(|((y, ax), prev)| y - ax + memory * prev)
            .collect();
        ensure_finite(&residual, t, "residual")?;

        let tau2 = match config.tau {
            TauEstimate::Empirical => ratio * norm_sqr(&residual) / m as f64,
            TauEstimate::StateEvolution => ratio * (instance.sigma2 + last_var),
        };
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::NonFinite {
                iteration: t,
                step: "tau2",
            });
        }

        let back = op.adjoint(&residual)?;
        let pseudo: Vec<C64> = state
            .x_hat
            .iter()
            .zip(&back)
            .map(|(x, b)| x + ratio * b)
            .collect();
        ensure_finite(&pseudo, t, "pseudo-data")?;

        let denoiser = AwgnObservationModel::new(1.0 / tau2, *prior)?;
        let mut x_new = Vec::with_capacity(n);
        let mut var_sum = 0.0;
        for &q in &pseudo {
            let p = denoiser.posterior(q).map_err(|_| Error::NonFinite {
                iteration: t,
                step: "denoise",
            })?;
            x_new.push(p.mean);
            var_sum += p.variance;
        }
        let mean_var = var_sum / n as f64;
        let onsager_coeff = mean_var / tau2;

        records.push(IterationRecord {
            iteration: t,
            mse: mse(&x_new, &instance.x_true),
            clamp_events: 0,
            detail: IterationDetail::Amp {
                tau2,
                onsager_coeff,
                mean_posterior_var: mean_var,
                pseudo_data_error_var: mse(&pseudo, &instance.x_true),
            },
        });

        let beta = config.damping;
        state.x_hat = if beta < 1.0 {
            x_new
                .iter()
                .zip(&state.x_hat)
                .map(|(new, old)| beta * new + (1.0 - beta) * old)
                .collect()
        } else {
            x_new
        };
        state.residual = residual;
        state.onsager_coeff = onsager_coeff;
        state.tau2 = tau2;
        state.iteration = t;
        last_var = mean_var;

        if let Some(prev) = prev_mean_var {
            if (mean_var - prev).abs() / prev < config.rel_tol {
                stop_reason = StopReason::Converged;
                break;
            }
        }
        prev_mean_var = Some(mean_var);
    }

    Ok(RecoveryTrace {
        iterations_run: records.len(),
        records,
        estimate: state.x_hat,
        stop_reason,
    })
}
