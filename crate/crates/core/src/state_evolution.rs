//! Scalar state evolution for TSR with a partial DFT matrix and for AMP with
//! an i.i.d. Gaussian matrix, plus checkers for the monotonicity and
//! dominance properties that relate the two.
//!
//! TSR-DFT iterates, from `v_0 = 1`,
//!
//! ```text
//! eta_{t+1} = phi(v_t) = 1 / ((N-M)/M * v_t + N/M * sigma2)
//! v_{t+1}   = psi(eta_{t+1}) = (1/mmse(eta_{t+1}) - eta_{t+1})^-1
//! ```
//!
//! and AMP-IID iterates `eta_{t+1} = 1 / (N/M * (v_t + sigma2))`,
//! `v_{t+1} = mmse(eta_{t+1})`. In both cases `mmse(eta_{t+1})` predicts the
//! MSE of the estimate produced in iteration `t + 1`.

use serde::{Deserialize, Serialize};

use crate::denoiser::{mmse, AwgnObservationModel};
use crate::error::{Error, Result};
use crate::model::BernoulliGaussianPrior;

/// Floor on `1/mmse(eta) - eta` in `psi`.
pub const PSI_DENOMINATOR_FLOOR: f64 = 1e-13;

/// Beyond this SNR the recursion is treated as having reached exact recovery.
pub const ETA_CAP: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeParams {
    pub n: usize,
    pub m: usize,
    pub sigma2: f64,
    pub prior: BernoulliGaussianPrior,
    pub t_max: usize,
    /// Convergence threshold on the relative change of `v`.
    pub rel_tol: f64,
}

impl SeParams {
    pub fn new(n: usize, m: usize, sigma2: f64, prior: BernoulliGaussianPrior) -> Result<Self> {
        let p = Self {
            n,
            m,
            sigma2,
            prior,
            t_max: 500,
            rel_tol: 1e-12,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0 && self.m < self.n) {
            return Err(Error::invalid(
                "m",
                format!("need 0 < M < N, got M = {}, N = {}", self.m, self.n),
            ));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be finite and >= 0"));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max", "must be at least 1"));
        }
        Ok(())
    }

    /// `M / N`.
    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// `phi(v)` of the TSR recursion.
    pub fn phi(&self, v: f64) -> f64 {
        let (n, m) = (self.n as f64, self.m as f64);
        1.0 / ((n - m) / m * v + n / m * self.sigma2)
    }

    /// SNR map of the AMP-IID recursion.
    pub fn amp_eta(&self, v: f64) -> f64 {
        let (n, m) = (self.n as f64, self.m as f64);
        1.0 / (n / m * (v + self.sigma2))
    }

    /// Upper bound `(M/N) / sigma2` on the TSR SNR; infinite when noiseless.
    pub fn eta_bound(&self) -> f64 {
        if self.sigma2 > 0.0 {
            self.ratio() / self.sigma2
        } else {
            f64::INFINITY
        }
    }
}

/// `psi` from `mmse(eta)` and `1 - eta mmse(eta)`, using
/// `1/mmse - eta = (1 - eta mmse) / mmse`. The flag reports a floored
/// denominator.
pub fn psi_from_moments(mmse_value: f64, complement: f64) -> (f64, bool) {
    let denom = complement / mmse_value;
    if denom < PSI_DENOMINATOR_FLOOR {
        (1.0 / PSI_DENOMINATOR_FLOOR, true)
    } else {
        (1.0 / denom, false)
    }
}

fn mmse_moments(eta: f64, prior: &BernoulliGaussianPrior) -> Result<(f64, f64)> {
    AwgnObservationModel::new(eta, *prior)?.mmse_and_complement()
}

pub fn psi(eta: f64, prior: &BernoulliGaussianPrior) -> Result<f64> {
    let (m, c) = mmse_moments(eta, prior)?;
    Ok(psi_from_moments(m, c).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SePoint {
    /// `v_t`.
    pub v: f64,
    /// `eta_{t+1}`.
    pub eta_next: f64,
    /// `mmse(eta_{t+1})`, the predicted MSE after iteration `t + 1`.
    pub mmse_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeTrajectory {
    /// Entry `t` holds `(v_t, eta_{t+1}, mmse(eta_{t+1}))`.
    pub points: Vec<SePoint>,
    /// The last `v` computed.
    pub final_v: f64,
    pub converged: bool,
    /// SNR at the last computed `v`, the stationary value when converged.
    pub fixed_point_eta: f64,
    /// `psi`'s denominator hit [`PSI_DENOMINATOR_FLOOR`] somewhere.
    pub denominator_floored: bool,
    /// The SNR exceeded [`ETA_CAP`]: noiseless exact-recovery regime.
    pub exact_recovery: bool,
}

impl SeTrajectory {
    /// Predicted MSE after 1-based `iteration`, held at the last value past
    /// the end of the trajectory.
    pub fn predicted_mse(&self, iteration: usize) -> f64 {
        let idx = iteration.saturating_sub(1).min(self.points.len() - 1);
        self.points[idx].mmse_next
    }

    /// `v_t`, held constant past the end.
    pub fn v_at(&self, t: usize) -> f64 {
        if t < self.points.len() {
            self.points[t].v
        } else {
            self.final_v
        }
    }

    pub fn converged_mse(&self) -> f64 {
        self.points.last().map(|p| p.mmse_next).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy)]
enum Recursion {
    Tsr,
    AmpIid,
}

fn iterate(
    params: &SeParams,
    kind: Recursion,
    steps: usize,
    early_stop: bool,
) -> Result<SeTrajectory> {
    params.validate()?;
    let eta_of = |v: f64| match kind {
        Recursion::Tsr => params.phi(v),
        Recursion::AmpIid => params.amp_eta(v),
    };
    let mut v = 1.0;
    let mut points = Vec::with_capacity(steps.min(4096));
    let mut converged = false;
    let mut floored = false;
    let mut exact_recovery = false;

    for t in 0..steps {
        let eta = eta_of(v);
        if !(eta.is_finite() && eta <= ETA_CAP) {
            exact_recovery = true;
            break;
        }
        let (m, c) = mmse_moments(eta, &params.prior).map_err(|e| Error::StateEvolution {
            iteration: t,
            source: Box::new(e),
        })?;
        let next = match kind {
            Recursion::Tsr => {
                let (next, hit) = psi_from_moments(m, c);
                floored |= hit;
                next
            }
            Recursion::AmpIid => m,
        };
        points.push(SePoint {
            v,
            eta_next: eta,
            mmse_next: m,
        });
        let change = (next - v).abs() / v;
        v = next;
        if early_stop && change < params.rel_tol {
            converged = true;
            break;
        }
    }
    if points.is_empty() {
        return Err(Error::invalid(
            "sigma2",
            "initial SNR exceeds the supported range",
        ));
    }

    Ok(SeTrajectory {
        points,
        final_v: v,
        converged,
        fixed_point_eta: eta_of(v),
        denominator_floored: floored,
        exact_recovery,
    })
}

/// TSR-DFT state evolution from `v_0 = 1` until `t_max` or convergence.
pub fn se_tsr(params: &SeParams) -> Result<SeTrajectory> {
    iterate(params, Recursion::Tsr, params.t_max, true)
}

/// AMP-IID state evolution from `v_0 = 1` until `t_max` or convergence.
pub fn se_amp(params: &SeParams) -> Result<SeTrajectory> {
    iterate(params, Recursion::AmpIid, params.t_max, true)
}

/// TSR-DFT recursion written in the AMP-IID normalization,
/// `v' = (N-M)/N * v`:
///
/// ```text
/// eta_{t+1}  = 1 / (N/M * v'_t + N/M * sigma2)
/// v'_{t+1}   = (N-M)/N * (1/mmse(eta_{t+1}) - eta_{t+1})^-1
/// ```
///
/// Returns `(v'_t, eta_{t+1})` for `t < steps`.
pub fn se_tsr_normalized(params: &SeParams, steps: usize) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    let scale = (params.n - params.m) as f64 / params.n as f64;
    let mut v = scale;
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let eta = params.amp_eta(v);
        let (m, c) = mmse_moments(eta, &params.prior).map_err(|e| Error::StateEvolution {
            iteration: t,
            source: Box::new(e),
        })?;
        out.push((v, eta));
        v = scale * psi_from_moments(m, c).0;
    }
    Ok(out)
}

/// Stationary SNR predicted from `mmse(eta)`: the smaller root of
/// `sigma2 * mmse * eta^2 - (mmse + sigma2) * eta + M/N = 0`,
///
/// ```text
/// eta = (mmse + sigma2 - sqrt((mmse + sigma2)^2 - 4 sigma2 mmse M/N)) / (2 sigma2 mmse)
/// ```
///
/// evaluated in the rationalized form `2 (M/N) / (mmse + sigma2 + sqrt(...))`,
/// which is also valid at `sigma2 = 0`.
pub fn fixed_point_rhs(mmse_value: f64, params: &SeParams) -> Result<f64> {
    let b = mmse_value + params.sigma2;
    let disc = b * b - 4.0 * params.sigma2 * mmse_value * params.ratio();
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    Ok(2.0 * params.ratio() / (b + disc.sqrt()))
}

/// `|eta - rhs(mmse(eta))|`; zero exactly at a stationary point of the TSR
/// recursion.
pub fn fixed_point_residual(eta_inf: f64, params: &SeParams) -> Result<f64> {
    if !(eta_inf > 0.0 && eta_inf.is_finite()) {
        return Err(Error::invalid("eta_inf", "must be positive and finite"));
    }
    params.validate()?;
    let m = mmse(eta_inf, &params.prior)?;
    Ok((eta_inf - fixed_point_rhs(m, params)?).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominanceClaim {
    /// `v_TSR-DFT_t <= v_AMP-IID_t`.
    Variance,
    /// `mmse(eta_TSR_{t+1}) <= mmse(eta_AMP_{t+1})`.
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub t: usize,
    /// `(N-M)/N * v_t` from the TSR recursion.
    pub v_tsr_dft: f64,
    pub v_amp_iid: f64,
    /// `v_amp_iid - v_tsr_dft`.
    pub margin: f64,
    pub mmse_tsr: f64,
    pub mmse_amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub t: usize,
    pub claim: DominanceClaim,
    /// Signed margin, negative beyond the slack.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub slack: f64,
    pub violation: Option<DominanceViolation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

pub const DOMINANCE_SLACK: f64 = 1e-9;

/// Compares both recursions in the common normalization for `t = 0..=t_max`.
pub fn check_dominance(params: &SeParams, t_max: usize) -> Result<DominanceReport> {
    let tsr = iterate(params, Recursion::Tsr, t_max + 1, false)?;
    let amp = iterate(params, Recursion::AmpIid, t_max + 1, false)?;
    let scale = (params.n - params.m) as f64 / params.n as f64;
    let mut rows = Vec::with_capacity(t_max + 1);
    let mut violation = None;
    for t in 0..=t_max {
        let v_tsr_dft = scale * tsr.v_at(t);
        let v_amp_iid = amp.v_at(t);
        let mmse_tsr = tsr.predicted_mse(t + 1);
        let mmse_amp = amp.predicted_mse(t + 1);
        let margin = v_amp_iid - v_tsr_dft;
        if violation.is_none() {
            if margin < -DOMINANCE_SLACK {
                violation = Some(DominanceViolation {
                    t,
                    claim: DominanceClaim::Variance,
                    margin,
                });
            } else if mmse_amp - mmse_tsr < -DOMINANCE_SLACK {
                violation = Some(DominanceViolation {
                    t,
                    claim: DominanceClaim::Mmse,
                    margin: mmse_amp - mmse_tsr,
                });
            }
        }
        rows.push(DominanceRow {
            t,
            v_tsr_dft,
            v_amp_iid,
            margin,
            mmse_tsr,
            mmse_amp,
        });
    }
    Ok(DominanceReport {
        rows,
        slack: DOMINANCE_SLACK,
        violation,
    })
}

pub const TRANSFER_SLACK: f64 = 1e-12;

/// A pair of adjacent grid points where a transfer function increased.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferViolation {
    pub x0: f64,
    pub x1: f64,
    pub f0: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub phi_violations: Vec<TransferViolation>,
    pub psi_violations: Vec<TransferViolation>,
}

impl TransferReport {
    pub fn passed(&self) -> bool {
        self.phi_violations.is_empty() && self.psi_violations.is_empty()
    }
}

fn increasing_violations(
    xs: &[f64],
    f: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<TransferViolation>> {
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    Ok(xs
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, fv)| fv[1] > fv[0] + TRANSFER_SLACK * fv[0].abs().max(1.0))
        .map(|(x, fv)| TransferViolation {
            x0: x[0],
            x1: x[1],
            f0: fv[0],
            f1: fv[1],
        })
        .collect())
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            name,
            "grid must have at least 2 strictly increasing points",
        ));
    }
    Ok(())
}

/// Checks that `phi` is non-increasing over `v_grid` and `psi` over
/// `eta_grid`.
pub fn check_monotone_transfer(
    params: &SeParams,
    v_grid: &[f64],
    eta_grid: &[f64],
) -> Result<TransferReport> {
    params.validate()?;
    check_grid("v_grid", v_grid)?;
    check_grid("eta_grid", eta_grid)?;
    Ok(TransferReport {
        phi_violations: increasing_violations(v_grid, |v| Ok(params.phi(v)))?,
        psi_violations: increasing_violations(eta_grid, |eta| psi(eta, &params.prior))?,
    })
}

/// First way in which a TSR trajectory breaks monotonicity or its bounds,
/// within relative slack `slack`.
pub fn trajectory_bound_violation(
    traj: &SeTrajectory,
    params: &SeParams,
    slack: f64,
) -> Option<String> {
    let tol = |x: f64| slack * x.abs().max(1.0);
    let bound = params.eta_bound();
    for (t, p) in traj.points.iter().enumerate() {
        if p.v < -tol(p.v) || p.v > 1.0 + tol(1.0) {
            return Some(format!("v_{t} = {} outside [0, 1]", p.v));
        }
        if !(p.eta_next > 0.0) || p.eta_next > bound + tol(bound) {
            return Some(format!(
                "eta_{} = {} outside (0, {bound}]",
                t + 1,
                p.eta_next
            ));
        }
    }
    for (t, w) in traj.points.windows(2).enumerate() {
        if w[1].v > w[0].v + tol(w[0].v) {
            return Some(format!(
                "v increased at t = {}: {} -> {}",
                t + 1,
                w[0].v,
                w[1].v
            ));
        }
        if w[1].eta_next < w[0].eta_next - tol(w[0].eta_next) {
            return Some(format!(
                "eta decreased at t = {}: {} -> {}",
                t + 2,
                w[0].eta_next,
                w[1].eta_next
            ));
        }
    }
    None
}

/// `n` points logarithmically spaced over `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}
