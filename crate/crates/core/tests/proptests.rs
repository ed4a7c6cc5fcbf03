use approx::assert_relative_eq;
use proptest::prelude::*;

use tsr_core::denoiser::{mmse, AwgnObservationModel};
use tsr_core::model::{BernoulliGaussianPrior, LinearOperator, PartialDftOperator, C64};
use tsr_core::rng::{substream, Purpose};
use tsr_core::state_evolution::{psi, SeParams};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im)),
        len,
    )
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_dft_adjoint_identity(seed in any::<u64>(), (x, u) in (complex_vec(64), complex_vec(40))) {
        let op = PartialDftOperator::random(64, 40, &mut substream(seed, 0, Purpose::Rows)).unwrap();
        let lhs = inner(&op.forward(&x).unwrap(), &u);
        let rhs = inner(&x, &op.adjoint(&u).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn posterior_mean_shrinks_along_the_observation(
        lambda in 0.05..1.0f64,
        eta in 1e-2..1e4f64,
        re in -50.0..50.0f64,
        im in -50.0..50.0f64,
    ) {
        let prior = BernoulliGaussianPrior::new(lambda).unwrap();
        let model = AwgnObservationModel::new(eta, prior).unwrap();
        let r = C64::new(re, im);
        let p = model.posterior(r).unwrap();
        let gain = prior.active_variance() / (prior.active_variance() + 1.0 / eta);
        // mean = pi * gain * r with pi in [0, 1]
        let ratio = if r.norm() > 0.0 { p.mean / r } else { C64::new(0.0, 0.0) };
        prop_assert!(ratio.im.abs() < 1e-12);
        prop_assert!(ratio.re >= 0.0 && ratio.re <= gain * (1.0 + 1e-12));
        prop_assert!(p.variance > 0.0 && p.variance.is_finite());
    }

    #[test]
    fn mmse_is_decreasing_and_below_the_snr_bound(lambda in 0.05..1.0f64, eta in 1e-3..1e5f64, step in 1.01..4.0f64) {
        let prior = BernoulliGaussianPrior::new(lambda).unwrap();
        let a = mmse(eta, &prior).unwrap();
        let b = mmse(eta * step, &prior).unwrap();
        prop_assert!(b < a);
        prop_assert!(a <= 1.0 && a <= (1.0 / eta) * (1.0 + 1e-12));
        let p = psi(eta, &prior).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0 + 1e-9);
    }

    #[test]
    fn phi_is_bounded_by_the_noise_limit(ratio in 0.1..0.95f64, sigma2 in 1e-4..1.0f64, v in 0.0..1.0f64) {
        let n = 1000;
        let m = (ratio * n as f64).round() as usize;
        let params = SeParams::new(n, m, sigma2, BernoulliGaussianPrior::new(0.5).unwrap()).unwrap();
        let eta = params.phi(v);
        prop_assert!(eta > 0.0 && eta <= params.eta_bound() * (1.0 + 1e-12));
    }
}

#[test]
fn dense_prior_posterior_is_linear_shrinkage() {
    let prior = BernoulliGaussianPrior::new(1.0).unwrap();
    let model = AwgnObservationModel::new(3.0, prior).unwrap();
    let r = C64::new(0.3, -1.2);
    let p = model.posterior(r).unwrap();
    assert_relative_eq!(p.mean.re, r.re * 0.75, max_relative = 1e-14);
    assert_relative_eq!(p.mean.im, r.im * 0.75, max_relative = 1e-14);
    assert_relative_eq!(p.variance, 0.25, max_relative = 1e-14);
}
