use rand::Rng;

use super::{
    complex_gaussian, sample_signal_with, BernoulliGaussianPrior, LinearOperator, SensingOperator,
    C64,
};
use crate::error::{check_len, Error, Result};
use crate::rng::{substream, Purpose};

/// One realization of `y = A x + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub x_true: Vec<C64>,
    pub y: Vec<C64>,
    pub sigma2: f64,
    pub operator: SensingOperator,
    pub seed: u64,
}

impl ProblemInstance {
    /// Assembles an instance from a given signal and noise realization.
    pub fn from_parts(
        x_true: Vec<C64>,
        noise: &[C64],
        operator: SensingOperator,
        sigma2: f64,
        seed: u64,
    ) -> Result<Self> {
        check_sigma2(sigma2)?;
        check_len(operator.m(), noise.len())?;
        let mut y = operator.forward(&x_true)?;
        for (yi, ni) in y.iter_mut().zip(noise) {
            *yi += ni;
        }
        Ok(Self {
            x_true,
            y,
            sigma2,
            operator,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.operator.n()
    }

    pub fn m(&self) -> usize {
        self.operator.m()
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 >= 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "sigma2",
            format!("must be finite and >= 0, got {sigma2}"),
        ))
    }
}

/// `m` i.i.d. `CN(0, sigma2)` samples.
pub fn sample_noise<R: Rng + ?Sized>(m: usize, sigma2: f64, rng: &mut R) -> Result<Vec<C64>> {
    check_sigma2(sigma2)?;
    Ok((0..m).map(|_| complex_gaussian(rng, sigma2)).collect())
}

/// Draws signal and noise from the seed's substreams and measures through
/// `operator`.
pub fn generate_instance(
    prior: &BernoulliGaussianPrior,
    operator: SensingOperator,
    sigma2: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    check_sigma2(sigma2)?;
    let x = sample_signal_with(
        prior,
        operator.n(),
        &mut substream(seed, 0, Purpose::Signal),
    )?;
    let noise = sample_noise(
        operator.m(),
        sigma2,
        &mut substream(seed, 0, Purpose::Noise),
    )?;
    ProblemInstance::from_parts(x, &noise, operator, sigma2, seed)
}
