//! Grid sweep over the denoiser and state-evolution invariants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::{mmse, mmse_derivative, AwgnObservationModel};
use crate::error::{Error, Result};
use crate::model::BernoulliGaussianPrior;
use crate::state_evolution::{
    check_dominance, check_monotone_transfer, fixed_point_residual, logspace, se_tsr,
    trajectory_bound_violation, SeParams,
};

/// Parameters of the property sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropertyGrid {
    /// Sparsities for the scalar denoiser checks.
    pub denoiser_sparsities: Vec<f64>,
    pub eta_grid: Vec<f64>,
    /// `(sparsity, eta)` points for the derivative check.
    pub derivative_points: Vec<(f64, f64)>,
    /// Sparsities for the state-evolution checks.
    pub se_sparsities: Vec<f64>,
    pub ratios: Vec<f64>,
    pub noise_variances: Vec<f64>,
    /// Reference dimension used to turn `M/N` into integer sizes.
    pub n: usize,
    pub v_grid: Vec<f64>,
    pub dominance_t_max: usize,
    /// Multiplies every `mmse` value in the scalar checks. Test hook for
    /// confirming the suite catches a corrupted denoiser; keep at 1.
    pub mmse_scale: f64,
}

impl Default for PropertyGrid {
    fn default() -> Self {
        Self {
            denoiser_sparsities: vec![0.1, 0.4, 1.0],
            eta_grid: logspace(1e-3, 1e6, 40),
            derivative_points: vec![
                (0.1, 0.01),
                (0.1, 1.0),
                (0.1, 100.0),
                (0.4, 0.1),
                (0.4, 1.0),
                (0.4, 10.0),
                (0.4, 1e3),
                (0.7, 0.5),
                (0.7, 50.0),
                (1.0, 1.0),
            ],
            se_sparsities: vec![0.1, 0.4, 0.7],
            ratios: vec![0.5, 0.7, 0.9],
            noise_variances: vec![1e-1, 1e-2, 1e-3],
            n: 10_000,
            v_grid: logspace(1e-8, 1.0, 40),
            dominance_t_max: 100,
            mmse_scale: 1.0,
        }
    }
}

pub const PROPERTY1_SLACK: f64 = 1e-12;
pub const DERIVATIVE_TOL: f64 = 1e-6;
pub const DECOMPOSITION_TOL: f64 = 1e-8;
pub const SE_BOUND_SLACK: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    MmseUpperBound,
    MmseDerivative,
    MmseMonotone,
    MmseRange,
    Decomposition,
    TransferMonotone,
    SeBounds,
    FixedPoint,
    Dominance,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::MmseUpperBound => "mmse-upper-bound",
            CheckKind::MmseDerivative => "mmse-derivative",
            CheckKind::MmseMonotone => "mmse-monotone",
            CheckKind::MmseRange => "mmse-range",
            CheckKind::Decomposition => "decomposition",
            CheckKind::TransferMonotone => "transfer-monotone",
            CheckKind::SeBounds => "se-bounds",
            CheckKind::FixedPoint => "fixed-point",
            CheckKind::Dominance => "dominance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub kind: CheckKind,
    /// Human-readable grid point, e.g. `lambda=0.4 m/n=0.7 sigma2=0.01`.
    pub point: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    pub fn of_kind(&self, kind: CheckKind) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(move |o| o.kind == kind)
    }

    /// Whether every check of `kind` passed, and at least one ran.
    pub fn kind_passed(&self, kind: CheckKind) -> bool {
        let mut any = false;
        for o in self.of_kind(kind) {
            any = true;
            if !o.passed {
                return false;
            }
        }
        any
    }
}

fn outcome(kind: CheckKind, point: String, failure: Option<String>) -> CheckOutcome {
    CheckOutcome {
        kind,
        point,
        passed: failure.is_none(),
        detail: failure.unwrap_or_default(),
    }
}

fn errored(kind: CheckKind, point: String, e: Error) -> CheckOutcome {
    outcome(kind, point, Some(format!("error: {e}")))
}

fn scalar_checks(lambda: f64, grid: &PropertyGrid) -> Vec<CheckOutcome> {
    let point = format!("lambda={lambda}");
    let prior = match BernoulliGaussianPrior::new(lambda) {
        Ok(p) => p,
        Err(e) => return vec![errored(CheckKind::MmseUpperBound, point, e)],
    };
    let values: Result<Vec<f64>> = grid
        .eta_grid
        .iter()
        .map(|&eta| Ok(grid.mmse_scale * mmse(eta, &prior)?))
        .collect();
    let values = match values {
        Ok(v) => v,
        Err(e) => return vec![errored(CheckKind::MmseUpperBound, point, e)],
    };
    let etas = &grid.eta_grid;

    let bound = etas
        .iter()
        .zip(&values)
        .find(|&(&eta, &m)| m > (1.0 / eta) * (1.0 + PROPERTY1_SLACK))
        .map(|(eta, m)| format!("mmse({eta}) = {m} > 1/eta = {}", 1.0 / eta));
    let range = etas
        .iter()
        .zip(&values)
        .find(|&(_, &m)| !(m > 0.0 && m <= 1.0))
        .map(|(eta, m)| format!("mmse({eta}) = {m} outside (0, 1]"));
    let monotone = etas
        .windows(2)
        .zip(values.windows(2))
        .find(|(_, m)| m[1] >= m[0])
        .map(|(e, m)| format!("mmse({}) = {} >= mmse({}) = {}", e[1], m[1], e[0], m[0]));

    let mut decomposition = None;
    for &eta in etas {
        let moments = match AwgnObservationModel::new(eta, prior).and_then(|m| m.radial_moments()) {
            Ok(m) => m,
            Err(e) => {
                decomposition = Some(format!("eta={eta}: {e}"));
                break;
            }
        };
        let total = grid.mmse_scale * moments.mmse + moments.estimate_power;
        if (total - 1.0).abs() > DECOMPOSITION_TOL
            || (moments.correlation - 1.0).abs() > DECOMPOSITION_TOL
        {
            decomposition = Some(format!(
                "eta={eta}: mmse + E|x_hat|^2 = {total}, E[conj(r) x_hat] = {}",
                moments.correlation
            ));
            break;
        }
    }

    vec![
        outcome(CheckKind::MmseUpperBound, point.clone(), bound),
        outcome(CheckKind::MmseRange, point.clone(), range),
        outcome(CheckKind::MmseMonotone, point.clone(), monotone),
        outcome(CheckKind::Decomposition, point, decomposition),
    ]
}

fn derivative_check(lambda: f64, eta: f64, scale: f64) -> CheckOutcome {
    let point = format!("lambda={lambda} eta={eta}");
    let run = || -> Result<Option<String>> {
        let prior = BernoulliGaussianPrior::new(lambda)?;
        let h = eta * 1e-5;
        let fd = scale * (mmse(eta + h, &prior)? - mmse(eta - h, &prior)?) / (2.0 * h);
        let d = scale * mmse_derivative(eta, &prior)?;
        let rel = ((d - fd) / fd).abs();
        Ok((rel > DERIVATIVE_TOL || d >= 0.0)
            .then(|| format!("analytic {d} vs finite difference {fd} (relative {rel:.3e})")))
    };
    match run() {
        Ok(f) => outcome(CheckKind::MmseDerivative, point, f),
        Err(e) => errored(CheckKind::MmseDerivative, point, e),
    }
}

fn se_checks(params: SeParams, grid: &PropertyGrid) -> Vec<CheckOutcome> {
    let point = format!(
        "lambda={} m/n={} sigma2={}",
        params.prior.sparsity(),
        params.ratio(),
        params.sigma2
    );
    let mut out = Vec::with_capacity(4);

    out.push(
        match check_monotone_transfer(&params, &grid.v_grid, &grid.eta_grid) {
            Ok(r) if r.passed() => outcome(CheckKind::TransferMonotone, point.clone(), None),
            Ok(r) => outcome(
                CheckKind::TransferMonotone,
                point.clone(),
                Some(format!(
                    "phi violations {:?}, psi violations {:?}",
                    r.phi_violations, r.psi_violations
                )),
            ),
            Err(e) => errored(CheckKind::TransferMonotone, point.clone(), e),
        },
    );

    match se_tsr(&params) {
        Ok(traj) => {
            out.push(outcome(
                CheckKind::SeBounds,
                point.clone(),
                trajectory_bound_violation(&traj, &params, SE_BOUND_SLACK),
            ));
            let fp = if traj.exact_recovery {
                Ok(None)
            } else if !traj.converged {
                Ok(Some(format!(
                    "no convergence within {} iterations",
                    params.t_max
                )))
            } else {
                fixed_point_residual(traj.fixed_point_eta, &params).map(|r| {
                    (r >= FIXED_POINT_TOL)
                        .then(|| format!("residual {r:.3e} at eta = {}", traj.fixed_point_eta))
                })
            };
            out.push(match fp {
                Ok(f) => outcome(CheckKind::FixedPoint, point.clone(), f),
                Err(e) => errored(CheckKind::FixedPoint, point.clone(), e),
            });
        }
        Err(e) => {
            let msg = Some(format!("error: {e}"));
            out.push(outcome(CheckKind::SeBounds, point.clone(), msg.clone()));
            out.push(outcome(CheckKind::FixedPoint, point.clone(), msg));
        }
    }

    out.push(match check_dominance(&params, grid.dominance_t_max) {
        Ok(r) => outcome(
            CheckKind::Dominance,
            point,
            r.violation.map(|v| {
                format!(
                    "{:?} claim fails at t = {} (margin {:.3e})",
                    v.claim, v.t, v.margin
                )
            }),
        ),
        Err(e) => errored(CheckKind::Dominance, point, e),
    });
    out
}

impl PropertyGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", "must be at least 2"));
        }
        if !(self.mmse_scale > 0.0 && self.mmse_scale.is_finite()) {
            return Err(Error::invalid("mmse_scale", "must be positive"));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid("ratios", format!("{r} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// The `(lambda, M/N, sigma2)` state-evolution parameter points.
    pub fn se_points(&self) -> Result<Vec<SeParams>> {
        let mut pts = Vec::new();
        for &l in &self.se_sparsities {
            let prior = BernoulliGaussianPrior::new(l)?;
            for &r in &self.ratios {
                let m = (r * self.n as f64).round() as usize;
                for &s in &self.noise_variances {
                    pts.push(SeParams::new(self.n, m, s, prior)?);
                }
            }
        }
        Ok(pts)
    }
}

/// Runs every check on `grid`. Individual failures are collected in the
/// report; only an invalid grid is an error.
pub fn run_property_suite(grid: &PropertyGrid) -> Result<PropertyReport> {
    grid.validate()?;
    let points = grid.se_points()?;
    let mut outcomes: Vec<CheckOutcome> = grid
        .denoiser_sparsities
        .par_iter()
        .map(|&l| scalar_checks(l, grid))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    outcomes.extend(
        grid.derivative_points
            .par_iter()
            .map(|&(l, eta)| derivative_check(l, eta, grid.mmse_scale))
            .collect::<Vec<_>>(),
    );
    outcomes.extend(
        points
            .into_par_iter()
            .map(|p| se_checks(p, grid))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten(),
    );
    Ok(PropertyReport { outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> PropertyGrid {
        PropertyGrid {
            eta_grid: logspace(1e-3, 1e6, 12),
            derivative_points: vec![(0.4, 1.0)],
            se_sparsities: vec![0.4],
            ratios: vec![0.7],
            noise_variances: vec![1e-2],
            dominance_t_max: 20,
            ..PropertyGrid::default()
        }
    }

    #[test]
    fn small_grid_passes() {
        let report = run_property_suite(&small_grid()).unwrap();
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:?}");
        for kind in [
            CheckKind::MmseUpperBound,
            CheckKind::MmseDerivative,
            CheckKind::TransferMonotone,
            CheckKind::SeBounds,
            CheckKind::FixedPoint,
            CheckKind::Dominance,
        ] {
            assert!(report.kind_passed(kind), "{kind:?}");
        }
    }

    #[test]
    fn corrupted_mmse_breaks_upper_bound() {
        let grid = PropertyGrid {
            mmse_scale: 1.1,
            ..small_grid()
        };
        let report = run_property_suite(&grid).unwrap();
        assert!(!report.passed());
        assert!(!report.kind_passed(CheckKind::MmseUpperBound));
    }

    #[test]
    fn dense_point_has_unit_psi() {
        let prior = BernoulliGaussianPrior::new(1.0).unwrap();
        for eta in [1e-3, 1.0, 1e3] {
            let psi = crate::state_evolution::psi(eta, &prior).unwrap();
            assert!((psi - 1.0).abs() < 1e-9, "{psi}");
        }
        let grid = PropertyGrid {
            se_sparsities: vec![1.0],
            ..small_grid()
        };
        let report = run_property_suite(&grid).unwrap();
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:?}");
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let grid = PropertyGrid {
            ratios: vec![1.0],
            ..PropertyGrid::default()
        };
        assert!(run_property_suite(&grid).is_err());
    }
}
