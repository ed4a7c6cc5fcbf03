use serde::{Deserialize, Serialize};

use crate::model::C64;

/// Why an iterative recovery stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIterations,
    Converged,
}

/// Algorithm-specific scalar trackers for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum IterationDetail {
    Tsr {
        v_a_pri: f64,
        v_b_pri: f64,
        v_a_post: f64,
        v_b_post: f64,
        /// `| ||x_A^post|| - ||z_A^post|| | / ||z_A^post||`.
        parseval_gap: f64,
        /// Empirical per-entry variance of `x_B^pri - x_true`; compare to `v_b_pri`.
        pri_error_var: f64,
    },
    Amp {
        tau2: f64,
        onsager_coeff: f64,
        mean_posterior_var: f64,
        /// Empirical per-entry variance of `q - x_true`; compare to `tau2`.
        pseudo_data_error_var: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// `||x_hat - x_true||^2 / N` for this iteration's estimate.
    pub mse: f64,
    /// Variance clamps applied during this iteration.
    pub clamp_events: usize,
    pub detail: IterationDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrace {
    pub records: Vec<IterationRecord>,
    pub estimate: Vec<C64>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
}

impl RecoveryTrace {
    pub fn mse(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mse).collect()
    }

    pub fn clamp_events(&self) -> usize {
        self.records.iter().map(|r| r.clamp_events).sum()
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.records.last().map(|r| r.mse)
    }
}
