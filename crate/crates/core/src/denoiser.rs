//! Scalar MMSE denoising of a Bernoulli-Gaussian entry observed in complex
//! AWGN, `r = x + w` with `w ~ CN(0, 1/eta)`, and the `mmse(eta)` curve.
//!
//! Given `r`, the posterior is a two-component mixture: a point mass at zero
//! and `CN(g r, g s)` with `s = 1/eta`, `a = 1/lambda`, `g = a / (a + s)`.
//! The weight `pi` of the Gaussian component depends on `r` only through
//! `t = |r|^2`:
//!
//! ```text
//! logit(pi) = ln(lambda / (1 - lambda)) + ln(s / (a + s)) + t * a / (s (a + s))
//! E[x | r]   = pi g r
//! var[x | r] = pi g s + pi (1 - pi) g^2 t
//! ```
//!
//! Because every posterior functional is radial, expectations over `r`
//! reduce to one-dimensional integrals over `t`, whose law is a mixture of
//! two exponentials with means `s` and `a + s`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{complex_gaussian, BernoulliGaussianPrior, C64};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{substream, Purpose};

/// Upper limit of the scaled radial variable `u = t / scale`; the
/// exponential tail beyond it is below `1e-17`.
const RADIAL_CUTOFF: f64 = 40.0;

/// `r = x + w`, `w ~ CN(0, 1/snr)`, `x` drawn from `prior`.
#[derive(Debug, Clone, Copy)]
pub struct AwgnObservationModel {
    snr: f64,
    prior: BernoulliGaussianPrior,
    noise_var: f64,
    gain: f64,
    logit_offset: f64,
    logit_slope: f64,
}

/// Conditional mean and variance of `x` given one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean: C64,
    pub variance: f64,
}

impl AwgnObservationModel {
    pub fn new(snr: f64, prior: BernoulliGaussianPrior) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::invalid(
                "eta",
                format!("must be positive and finite, got {snr}"),
            ));
        }
        let s = 1.0 / snr;
        let a = prior.active_variance();
        let lambda = prior.sparsity();
        let logit_offset = if prior.is_dense() {
            f64::INFINITY
        } else {
            (lambda / (1.0 - lambda)).ln() + (s / (a + s)).ln()
        };
        Ok(Self {
            snr,
            prior,
            noise_var: s,
            gain: a / (a + s),
            logit_offset,
            logit_slope: a / (s * (a + s)),
        })
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn prior(&self) -> &BernoulliGaussianPrior {
        &self.prior
    }

    /// `(pi, 1 - pi)` at `t = |r|^2`, each computed without cancellation.
    fn responsibility(&self, t: f64) -> (f64, f64) {
        if self.logit_offset == f64::INFINITY {
            return (1.0, 0.0);
        }
        let d = self.logit_offset + self.logit_slope * t;
        if d >= 0.0 {
            let e = (-d).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = d.exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        }
    }

    /// Posterior variance and the magnitude of the posterior pseudo-variance
    /// `|E[(x - E[x|r])^2 | r]|` as functions of `t = |r|^2`.
    fn radial_variances(&self, t: f64) -> (f64, f64) {
        let (pi, rest) = self.responsibility(t);
        let spread = pi * rest * self.gain * self.gain * t;
        (pi * self.gain * self.noise_var + spread, spread)
    }

    /// `1 - eta var[x|r]` at `t = |r|^2`, arranged so the terms near one do
    /// not cancel.
    fn radial_complement(&self, t: f64) -> f64 {
        let (pi, rest) = self.responsibility(t);
        let shrink_gap = self.noise_var / (self.prior.active_variance() + self.noise_var);
        rest * (1.0 - pi * self.gain * self.gain * t / self.noise_var) + pi * shrink_gap
    }

    /// `(mmse, 1 - eta mmse)` from one quadrature pass. The second entry is
    /// accurate to full relative precision even where `eta mmse` is close to 1.
    pub fn mmse_and_complement(&self) -> Result<(f64, f64)> {
        let [m, c] =
            self.radial_expectation(|t| [self.radial_variances(t).0, self.radial_complement(t)])?;
        Ok((m, c))
    }

    pub fn posterior(&self, r: C64) -> Result<PosteriorMoments> {
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::NonFiniteObservation);
        }
        let t = r.norm_sqr();
        let (pi, _) = self.responsibility(t);
        let (variance, _) = self.radial_variances(t);
        Ok(PosteriorMoments {
            mean: r * (pi * self.gain),
            variance,
        })
    }

    /// Splits `[0, RADIAL_CUTOFF]` around the responsibility crossover for a
    /// mixture component of the given scale.
    fn breaks(&self, scale: f64) -> Vec<f64> {
        if self.logit_offset == f64::INFINITY || self.logit_offset >= 0.0 {
            return Vec::new();
        }
        let crossover = -self.logit_offset / self.logit_slope / scale;
        let width = 1.0 / (self.logit_slope * scale);
        // The mixed term pi (1 - pi) decays like exp(-|k|) at k widths from
        // the crossover but is still visible at k = 16.
        [
            -48.0, -24.0, -12.0, -6.0, -2.0, 0.0, 2.0, 6.0, 12.0, 24.0, 48.0,
        ]
        .iter()
        .map(|k| crossover + k * width)
        .collect()
    }

    /// `E_r[h(|r|^2)]` under the marginal law of `r`.
    pub(crate) fn radial_expectation<const K: usize>(
        &self,
        h: impl Fn(f64) -> [f64; K],
    ) -> Result<[f64; K]> {
        let lambda = self.prior.sparsity();
        let components = [
            (1.0 - lambda, self.noise_var),
            (lambda, self.prior.active_variance() + self.noise_var),
        ];
        let mut total = [0.0; K];
        for (weight, scale) in components {
            if weight == 0.0 {
                continue;
            }
            let est = integrate(
                |u| {
                    let w = (-u).exp();
                    h(scale * u).map(|v| v * w)
                },
                0.0,
                RADIAL_CUTOFF,
                &self.breaks(scale),
                &Tolerance::default(),
            )?;
            for (acc, v) in total.iter_mut().zip(est.value) {
                *acc += weight * v;
            }
        }
        Ok(total)
    }

    /// Several radial functionals evaluated in one quadrature pass.
    pub fn radial_moments(&self) -> Result<RadialMoments> {
        let gain = self.gain;
        let [mmse, var_sq, pseudo_sq, estimate_power, correlation] =
            self.radial_expectation(|t| {
                let (pi, _) = self.responsibility(t);
                let (var, pseudo) = self.radial_variances(t);
                let shrink = pi * gain;
                [
                    var,
                    var * var,
                    pseudo * pseudo,
                    shrink * shrink * t,
                    shrink * t,
                ]
            })?;
        Ok(RadialMoments {
            mmse,
            mean_squared_variance: var_sq,
            mean_squared_pseudo_variance: pseudo_sq,
            estimate_power,
            correlation,
        })
    }
}

/// Expectations over `r` of posterior functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMoments {
    /// `E[var[x|r]]`.
    pub mmse: f64,
    /// `E[var[x|r]^2]`.
    pub mean_squared_variance: f64,
    /// `E[|E[(x - x_hat)^2 | r]|^2]`, zero for a circular posterior.
    pub mean_squared_pseudo_variance: f64,
    /// `E[|E[x|r]|^2]`.
    pub estimate_power: f64,
    /// `E[conj(r) E[x|r]]`, real by symmetry; equals `E[|x|^2] = 1`.
    pub correlation: f64,
}

pub fn posterior_mean(r: C64, model: &AwgnObservationModel) -> Result<C64> {
    Ok(model.posterior(r)?.mean)
}

pub fn posterior_variance(r: C64, model: &AwgnObservationModel) -> Result<f64> {
    Ok(model.posterior(r)?.variance)
}

/// `mmse(eta) = E_r[var[x | r]]`.
pub fn mmse(eta: f64, prior: &BernoulliGaussianPrior) -> Result<f64> {
    let model = AwgnObservationModel::new(eta, *prior)?;
    let [v] = model.radial_expectation(|t| [model.radial_variances(t).0])?;
    Ok(v)
}

/// Exact `d mmse / d eta`.
///
/// For complex observations this is `-E[var^2] - E[|pvar|^2]` where `pvar`
/// is the posterior pseudo-variance. The second term vanishes only when the
/// posterior is circular (a Gaussian prior); for the spike-and-slab prior
/// it does not, and `-E[var^2]` alone is an upper bound on the slope.
pub fn mmse_derivative(eta: f64, prior: &BernoulliGaussianPrior) -> Result<f64> {
    let m = AwgnObservationModel::new(eta, *prior)?.radial_moments()?;
    Ok(-m.mean_squared_variance - m.mean_squared_pseudo_variance)
}

/// `E_r[var[x|r]^2]`.
pub fn mean_squared_variance(eta: f64, prior: &BernoulliGaussianPrior) -> Result<f64> {
    Ok(AwgnObservationModel::new(eta, *prior)?
        .radial_moments()?
        .mean_squared_variance)
}

const ORACLE_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `mmse(eta)` by averaging the posterior variance
/// over simulated observations. Returns `(estimate, standard error)`.
pub fn mmse_mc_oracle(
    eta: f64,
    prior: &BernoulliGaussianPrior,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 10_000 {
        return Err(Error::invalid("n_samples", "need at least 10^4 samples"));
    }
    let model = AwgnObservationModel::new(eta, *prior)?;
    let noise_var = 1.0 / eta;
    let chunks = n_samples.div_ceil(ORACLE_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64, Purpose::Oracle);
            let len = ORACLE_CHUNK.min(n_samples - c * ORACLE_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let r = prior.sample(&mut rng) + complex_gaussian(&mut rng, noise_var);
                let (v, _) = model.radial_variances(r.norm_sqr());
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partial
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
