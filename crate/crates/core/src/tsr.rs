//! Turbo signal recovery for partial DFT sensing.
//!
//! Module A is the LMMSE estimator of `z = F x` from `y = S z + n`; module B
//! is the entrywise Bernoulli-Gaussian MMSE denoiser acting on `x`. The two
//! exchange extrinsic means and variances of `x` (A to B) and of `z` (B to
//! A), so each module only ever sees information it did not produce.

use serde::{Deserialize, Serialize};

use crate::denoiser::AwgnObservationModel;
use crate::error::{Error, Result};
use crate::model::{
    mse, norm_sqr, BernoulliGaussianPrior, PartialDftOperator, ProblemInstance, SensingOperator,
    C64,
};
use crate::trace::{IterationDetail, IterationRecord, RecoveryTrace, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsrConfig {
    pub t_max: usize,
    /// Stop once the relative change of `v_B^post` drops below this.
    pub rel_tol: f64,
    /// Weight of the new extrinsic message in `[0, 1]`; 1 disables damping.
    pub damping: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for TsrConfig {
    fn default() -> Self {
        Self {
            t_max: 50,
            rel_tol: 1e-8,
            damping: 1.0,
            v_min: 1e-13,
            v_max: 1e13,
        }
    }
}

impl TsrConfig {
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
        if !(self.v_min > 0.0 && self.v_min < self.v_max) {
            return Err(Error::invalid("v_min", "need 0 < v_min < v_max"));
        }
        Ok(())
    }
}

/// Messages carried from one TSR iteration to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct TsrState {
    pub z_a_pri: Vec<C64>,
    pub v_a_pri: f64,
    pub x_b_pri: Vec<C64>,
    pub v_b_pri: f64,
    pub iteration: usize,
}

impl TsrState {
    pub fn initial(n: usize) -> Self {
        Self {
            z_a_pri: vec![C64::new(0.0, 0.0); n],
            v_a_pri: 1.0,
            x_b_pri: vec![C64::new(0.0, 0.0); n],
            v_b_pri: 1.0,
            iteration: 0,
        }
    }
}

struct Bounds {
    lo: f64,
    hi: f64,
    events: usize,
}

impl Bounds {
    fn clamp(&mut self, v: f64) -> f64 {
        if v < self.lo {
            self.events += 1;
            self.lo
        } else if v > self.hi || v.is_nan() {
            self.events += 1;
            self.hi
        } else {
            v
        }
    }

    /// `(1/post - 1/pri)^-1`, clamped. A non-positive precision gain maps to
    /// the upper bound.
    fn extrinsic(&mut self, post: f64, pri: f64) -> f64 {
        let gain = 1.0 / post - 1.0 / pri;
        self.clamp(if gain > 0.0 {
            1.0 / gain
        } else {
            f64::INFINITY
        })
    }
}

fn ensure_finite(v: &[C64], iteration: usize, step: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, step })
    }
}

/// LMMSE update of `z` given `y = S z + n` and the prior `CN(z_pri, v_pri I)`.
///
/// Sampled entries move toward the measurement; unsampled ones pass through.
/// Returns the posterior mean and the average posterior variance.
pub(crate) fn lmmse_update(
    op: &PartialDftOperator,
    y: &[C64],
    z_pri: &[C64],
    v_pri: f64,
    sigma2: f64,
) -> (Vec<C64>, f64) {
    let gain = v_pri / (v_pri + sigma2);
    let mut z_post = z_pri.to_vec();
    for (&row, &yi) in op.selected_rows().iter().zip(y) {
        z_post[row] += gain * (yi - z_pri[row]);
    }
    let ratio = op.selected_rows().len() as f64 / z_pri.len() as f64;
    let v_post = v_pri - ratio * v_pri * v_pri / (v_pri + sigma2);
    (z_post, v_post)
}

/// Runs TSR on a partial DFT instance, recording the MSE of the a
/// posteriori estimate `x_B^post` after every iteration.
pub fn run_tsr(
    instance: &ProblemInstance,
    prior: &BernoulliGaussianPrior,
    config: &TsrConfig,
) -> Result<RecoveryTrace> {
    config.validate()?;
    let op = match &instance.operator {
        SensingOperator::PartialDft(op) => op,
        other => {
            return Err(Error::UnsupportedOperator {
                algorithm: "tsr",
                operator: other.kind(),
            })
        }
    };
    let n = instance.n();
    let sigma2 = instance.sigma2;
    let beta = config.damping;

    let mut state = TsrState::initial(n);
    let mut records = Vec::with_capacity(config.t_max);
    let mut estimate = vec![C64::new(0.0, 0.0); n];
    let mut prev_v_b_post: Option<f64> = None;
    let mut stop_reason = StopReason::MaxIterations;

    for t in 1..=config.t_max {
        let mut bounds = Bounds {
            lo: config.v_min,
            hi: config.v_max,
            events: 0,
        };
        let v_a_pri = state.v_a_pri;

        let x_a_pri = op.idft(&state.z_a_pri)?;
        ensure_finite(&x_a_pri, t, "x_A^pri")?;

        let (z_a_post, v_a_post) = lmmse_update(op, &instance.y, &state.z_a_pri, v_a_pri, sigma2);
        ensure_finite(&z_a_post, t, "z_A^post")?;

        let x_a_post = op.idft(&z_a_post)?;
        let v_a_post = bounds.clamp(v_a_post);
        let z_norm = norm_sqr(&z_a_post).sqrt();
        let parseval_gap = if z_norm > 0.0 {
            (norm_sqr(&x_a_post).sqrt() - z_norm).abs() / z_norm
        } else {
            0.0
        };

        let v_b_pri = bounds.extrinsic(v_a_post, v_a_pri);
        let x_b_pri: Vec<C64> = x_a_post
            .iter()
            .zip(&x_a_pri)
            .map(|(post, pri)| v_b_pri * (post / v_a_post - pri / v_a_pri))
            .collect();
        ensure_finite(&x_b_pri, t, "x_B^pri")?;

        let z_b_pri = op.dft(&x_b_pri)?;

        let denoiser = AwgnObservationModel::new(1.0 / v_b_pri, *prior)?;
        let mut x_b_post = Vec::with_capacity(n);
        let mut var_sum = 0.0;
        for &r in &x_b_pri {
            let p = denoiser.posterior(r).map_err(|_| Error::NonFinite {
                iteration: t,
                step: "x_B^post",
            })?;
            x_b_post.push(p.mean);
            var_sum += p.variance;
        }
        ensure_finite(&x_b_post, t, "x_B^post")?;

        let z_b_post = op.dft(&x_b_post)?;
        let v_b_post = bounds.clamp(var_sum / n as f64);

        let v_a_next = bounds.extrinsic(v_b_post, v_b_pri);
        let z_a_next: Vec<C64> = z_b_post
            .iter()
            .zip(&z_b_pri)
            .map(|(post, pri)| v_a_next * (post / v_b_post - pri / v_b_pri))
            .collect();
        ensure_finite(&z_a_next, t, "z_A^pri")?;

        records.push(IterationRecord {
            iteration: t,
            mse: mse(&x_b_post, &instance.x_true),
            clamp_events: bounds.events,
            detail: IterationDetail::Tsr {
                v_a_pri,
                v_b_pri,
                v_a_post,
                v_b_post,
                parseval_gap,
                pri_error_var: mse(&x_b_pri, &instance.x_true),
            },
        });

        if beta < 1.0 {
            state.z_a_pri = z_a_next
                .iter()
                .zip(&state.z_a_pri)
                .map(|(new, old)| beta * new + (1.0 - beta) * old)
                .collect();
            state.v_a_pri = beta * v_a_next + (1.0 - beta) * v_a_pri;
        } else {
            state.z_a_pri = z_a_next;
            state.v_a_pri = v_a_next;
        }
        state.x_b_pri = x_b_pri;
        state.v_b_pri = v_b_pri;
        state.iteration = t;
        estimate = x_b_post;

        if let Some(prev) = prev_v_b_post {
            if (v_b_post - prev).abs() / prev < config.rel_tol {
                stop_reason = StopReason::Converged;
                break;
            }
        }
        prev_v_b_post = Some(v_b_post);
    }

    Ok(RecoveryTrace {
        iterations_run: records.len(),
        records,
        estimate,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{complex_gaussian, generate_instance, IidGaussianOperator};
    use crate::rng::{substream, Purpose};

    fn dft_instance(n: usize, m: usize, lambda: f64, sigma2: f64, seed: u64) -> ProblemInstance {
        let prior = BernoulliGaussianPrior::new(lambda).unwrap();
        let op = PartialDftOperator::random(n, m, &mut substream(seed, 0, Purpose::Rows)).unwrap();
        generate_instance(&prior, op.into(), sigma2, seed).unwrap()
    }

    #[test]
    fn lmmse_step_matches_literal_selection_matrix() {
        let (n, m) = (48, 20);
        let op = PartialDftOperator::random(n, m, &mut substream(4, 0, Purpose::Rows)).unwrap();
        let mut rng = substream(4, 0, Purpose::Oracle);
        let y: Vec<C64> = (0..m).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let z: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let (v, sigma2) = (0.7, 0.05);

        // S as an explicit M x N 0/1 matrix.
        let s: Vec<Vec<f64>> = op
            .selected_rows()
            .iter()
            .map(|&r| (0..n).map(|j| if j == r { 1.0 } else { 0.0 }).collect())
            .collect();
        let resid: Vec<C64> = (0..m)
            .map(|i| y[i] - (0..n).map(|j| s[i][j] * z[j]).sum::<C64>())
            .collect();
        let gain = v / (v + sigma2);
        let literal: Vec<C64> = (0..n)
            .map(|j| z[j] + gain * (0..m).map(|i| s[i][j] * resid[i]).sum::<C64>())
            .collect();
        let v_entries: Vec<f64> = (0..n)
            .map(|j| v - v * v / (v + sigma2) * (0..m).map(|i| s[i][j] * s[i][j]).sum::<f64>())
            .collect();
        let v_literal = v_entries.iter().sum::<f64>() / n as f64;

        let (fast, v_fast) = lmmse_update(&op, &y, &z, v, sigma2);
        for (a, b) in fast.iter().zip(&literal) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((v_fast - v_literal).abs() < 1e-14);
    }

    #[test]
    fn noiseless_full_dense_recovers_in_one_iteration() {
        let inst = dft_instance(64, 64, 1.0, 0.0, 2);
        let prior = BernoulliGaussianPrior::new(1.0).unwrap();
        let trace = run_tsr(&inst, &prior, &TsrConfig::default()).unwrap();
        assert!(trace.records[0].mse < 1e-20, "{}", trace.records[0].mse);
    }

    #[test]
    fn rejects_iid_operator() {
        let prior = BernoulliGaussianPrior::new(0.4).unwrap();
        let op =
            IidGaussianOperator::sample(8, 16, &mut substream(0, 0, Purpose::IidMatrix)).unwrap();
        let inst = generate_instance(&prior, op.into(), 0.01, 0).unwrap();
        assert!(matches!(
            run_tsr(&inst, &prior, &TsrConfig::default()),
            Err(Error::UnsupportedOperator {
                algorithm: "tsr",
                ..
            })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let inst = dft_instance(16, 8, 0.4, 0.01, 0);
        let prior = BernoulliGaussianPrior::new(0.4).unwrap();
        let cfg = TsrConfig {
            t_max: 0,
            ..TsrConfig::default()
        };
        assert!(run_tsr(&inst, &prior, &cfg).is_err());
    }

    #[test]
    fn parseval_and_determinism() {
        let inst = dft_instance(512, 358, 0.4, 1e-3, 9);
        let prior = BernoulliGaussianPrior::new(0.4).unwrap();
        let a = run_tsr(&inst, &prior, &TsrConfig::default()).unwrap();
        let b = run_tsr(&inst, &prior, &TsrConfig::default()).unwrap();
        assert_eq!(a, b);
        for r in &a.records {
            let IterationDetail::Tsr { parseval_gap, .. } = r.detail else {
                panic!("wrong detail")
            };
            assert!(parseval_gap < 1e-10);
        }
    }

    #[test]
    fn stops_on_tolerance() {
        let inst = dft_instance(256, 180, 0.4, 1e-2, 5);
        let prior = BernoulliGaussianPrior::new(0.4).unwrap();
        let trace = run_tsr(&inst, &prior, &TsrConfig::default()).unwrap();
        assert_eq!(trace.stop_reason, StopReason::Converged);
        assert!(trace.iterations_run < 50);
        assert_eq!(trace.records.len(), trace.iterations_run);
    }
}
