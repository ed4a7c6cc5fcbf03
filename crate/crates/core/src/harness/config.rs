use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BernoulliGaussianPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    TsrDft,
    AmpIid,
    AmpDft,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::TsrDft, Algorithm::AmpIid, Algorithm::AmpDft];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::TsrDft => "tsr-dft",
            Algorithm::AmpIid => "amp-iid",
            Algorithm::AmpDft => "amp-dft",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RowSelection {
    /// Fresh uniformly drawn row set for every trial.
    #[default]
    PerTrial,
    /// One row set, drawn from the master seed, shared by all trials.
    Fixed,
}

impl FromStr for RowSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-trial" => Ok(RowSelection::PerTrial),
            "fixed" => Ok(RowSelection::Fixed),
            _ => Err(Error::Config(format!("unknown row selection `{s}`"))),
        }
    }
}

pub const DEFAULT_M_OVER_N: f64 = 0.7;
pub const DEFAULT_SNR_DB: f64 = 30.0;

/// Monte Carlo experiment settings. At most one of `m` / `m_over_n` and one
/// of `sigma2` / `snr_db` may be set; when neither is, `M = round(0.7 N)` and
/// the SNR is 30 dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: Option<usize>,
    pub m_over_n: Option<f64>,
    pub lambda: f64,
    pub sigma2: Option<f64>,
    /// `sigma2 = 10^(-snr_db / 10)` for unit signal power.
    pub snr_db: Option<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub t_max: usize,
    pub rel_tol: f64,
    pub master_seed: u64,
    pub row_selection: RowSelection,
    /// AMP-IID reuses each trial's signal and noise instead of drawing its own.
    pub shared_instances: bool,
    /// Run trials on the rayon pool.
    pub parallel: bool,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1024,
            m: None,
            m_over_n: None,
            lambda: 0.4,
            sigma2: None,
            snr_db: None,
            algorithms: Algorithm::ALL.to_vec(),
            trials: 200,
            t_max: 50,
            rel_tol: 1e-8,
            master_seed: 0,
            row_selection: RowSelection::PerTrial,
            shared_instances: true,
            parallel: true,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Number of measurements after resolving `m_over_n`.
    pub fn resolved_m(&self) -> Result<usize> {
        match (self.m, self.m_over_n) {
            (Some(m), None) => Ok(m),
            (None, Some(r)) if r > 0.0 && r <= 1.0 => Ok((r * self.n as f64).round() as usize),
            (None, Some(r)) => Err(Error::invalid(
                "m_over_n",
                format!("must lie in (0, 1], got {r}"),
            )),
            (Some(_), Some(_)) => Err(Error::Config("set only one of m and m_over_n".into())),
            (None, None) => Ok((DEFAULT_M_OVER_N * self.n as f64).round() as usize),
        }
    }

    pub fn resolved_sigma2(&self) -> Result<f64> {
        match (self.sigma2, self.snr_db) {
            (Some(s), None) => Ok(s),
            (None, Some(db)) => Ok(10f64.powf(-db / 10.0)),
            (Some(_), Some(_)) => Err(Error::Config("set only one of sigma2 and snr_db".into())),
            (None, None) => Ok(10f64.powf(-DEFAULT_SNR_DB / 10.0)),
        }
    }

    pub fn prior(&self) -> Result<BernoulliGaussianPrior> {
        BernoulliGaussianPrior::new(self.lambda)
    }

    pub fn set_m(&mut self, m: usize) {
        self.m = Some(m);
        self.m_over_n = None;
    }

    pub fn set_m_over_n(&mut self, r: f64) {
        self.m = None;
        self.m_over_n = Some(r);
    }

    pub fn set_sigma2(&mut self, s: f64) {
        self.sigma2 = Some(s);
        self.snr_db = None;
    }

    pub fn set_snr_db(&mut self, db: f64) {
        self.sigma2 = None;
        self.snr_db = Some(db);
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.resolved_m()?;
        if m == 0 || m > self.n {
            return Err(Error::invalid(
                "m",
                format!("need 0 < M <= N, got M = {m}, N = {}", self.n),
            ));
        }
        let sigma2 = self.resolved_sigma2()?;
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be finite and >= 0"));
        }
        self.prior()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max", "must be at least 1"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol", "must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.resolved_m().unwrap(), 717);
        assert!((c.resolved_sigma2().unwrap() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn ratio_and_conflicts() {
        let mut c = ExperimentConfig::default();
        c.set_m_over_n(0.7);
        assert_eq!(c.resolved_m().unwrap(), 717);
        c.m = Some(10);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig {
            sigma2: Some(0.1),
            snr_db: Some(20.0),
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        c.set_sigma2(0.1);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_empty_and_zero() {
        let c = ExperimentConfig {
            algorithms: vec![],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            lambda: 0.0,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_partial_file() {
        let c: ExperimentConfig = toml::from_str(
            r#"
            n = 256
            m_over_n = 0.5
            algorithms = ["tsr-dft", "amp-dft"]
            row_selection = "fixed"
            "#,
        )
        .unwrap();
        assert_eq!(c.n, 256);
        assert_eq!(c.resolved_m().unwrap(), 128);
        assert_eq!(c.algorithms, vec![Algorithm::TsrDft, Algorithm::AmpDft]);
        assert_eq!(c.row_selection, RowSelection::Fixed);
        assert_eq!(c.trials, 200);
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("amp".parse::<Algorithm>().is_err());
    }
}
