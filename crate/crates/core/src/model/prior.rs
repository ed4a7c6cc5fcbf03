use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::C64;
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// Spike-and-slab law: `x = 0` with probability `1 - sparsity`, otherwise
/// circular complex Gaussian with variance `1 / sparsity`. Every entry has
/// unit second moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRepr", into = "PriorRepr")]
pub struct BernoulliGaussianPrior {
    sparsity: f64,
}

#[derive(Serialize, Deserialize)]
struct PriorRepr {
    sparsity: f64,
}

impl TryFrom<PriorRepr> for BernoulliGaussianPrior {
    type Error = Error;
    fn try_from(r: PriorRepr) -> Result<Self> {
        Self::new(r.sparsity)
    }
}

impl From<BernoulliGaussianPrior> for PriorRepr {
    fn from(p: BernoulliGaussianPrior) -> Self {
        PriorRepr {
            sparsity: p.sparsity,
        }
    }
}

impl BernoulliGaussianPrior {
    pub fn new(sparsity: f64) -> Result<Self> {
        if !(sparsity > 0.0 && sparsity <= 1.0) {
            return Err(Error::invalid(
                "sparsity",
                format!("must lie in (0, 1], got {sparsity}"),
            ));
        }
        Ok(Self { sparsity })
    }

    /// Probability that an entry is nonzero.
    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    /// Variance of the nonzero component, `1 / sparsity`.
    pub fn active_variance(&self) -> f64 {
        1.0 / self.sparsity
    }

    pub fn is_dense(&self) -> bool {
        self.sparsity >= 1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        // Draw the Bernoulli even when dense so the stream layout does not
        // depend on the sparsity.
        let active = rng.random::<f64>() < self.sparsity;
        let z = complex_gaussian(rng, self.active_variance());
        if active {
            z
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// Circular complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn sample_signal_with<R: Rng + ?Sized>(
    prior: &BernoulliGaussianPrior,
    n: usize,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::invalid("n", "signal length must be at least 1"));
    }
    Ok((0..n).map(|_| prior.sample(rng)).collect())
}

/// Draws `n` i.i.d. entries from `prior`, deterministically in `seed`.
pub fn sample_signal(prior: &BernoulliGaussianPrior, n: usize, seed: u64) -> Result<Vec<C64>> {
    sample_signal_with(prior, n, &mut substream(seed, 0, Purpose::Signal))
}
