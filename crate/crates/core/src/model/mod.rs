//! Signal model, sensing operators and synthetic problem instances.

mod instance;
mod operator;
mod prior;

pub use instance::{generate_instance, sample_noise, ProblemInstance};
pub use operator::{IidGaussianOperator, LinearOperator, PartialDftOperator, SensingOperator};
pub use prior::{complex_gaussian, sample_signal, sample_signal_with, BernoulliGaussianPrior};

pub type C64 = num_complex::Complex64;

/// Squared Euclidean norm.
pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Per-entry squared error `||a - b||^2 / len`.
pub fn mse(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        / a.len() as f64
}
