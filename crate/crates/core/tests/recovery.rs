use tsr_core::amp::{run_amp, AmpConfig};
use tsr_core::model::{
    generate_instance, BernoulliGaussianPrior, IidGaussianOperator, PartialDftOperator,
    ProblemInstance,
};
use tsr_core::rng::{substream, Purpose};
use tsr_core::state_evolution::{se_amp, se_tsr, SeParams};
use tsr_core::tsr::{run_tsr, TsrConfig};
use tsr_core::IterationDetail;

fn dft_instance(n: usize, m: usize, lambda: f64, sigma2: f64, seed: u64) -> ProblemInstance {
    let prior = BernoulliGaussianPrior::new(lambda).unwrap();
    let op = PartialDftOperator::random(n, m, &mut substream(seed, 0, Purpose::Rows)).unwrap();
    generate_instance(&prior, op.into(), sigma2, seed).unwrap()
}

fn iid_instance(n: usize, m: usize, lambda: f64, sigma2: f64, seed: u64) -> ProblemInstance {
    let prior = BernoulliGaussianPrior::new(lambda).unwrap();
    let op =
        IidGaussianOperator::sample(m, n, &mut substream(seed, 0, Purpose::IidMatrix)).unwrap();
    generate_instance(&prior, op.into(), sigma2, seed).unwrap()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn tsr_prior_error_is_consistent_with_its_variance() {
    let prior = BernoulliGaussianPrior::new(0.4).unwrap();
    for seed in 0..2 {
        let inst = dft_instance(8192, 5734, 0.4, 1e-3, seed);
        let cfg = TsrConfig {
            t_max: 20,
            rel_tol: 0.0,
            ..TsrConfig::default()
        };
        let trace = run_tsr(&inst, &prior, &cfg).unwrap();
        for r in &trace.records {
            let IterationDetail::Tsr {
                v_b_pri,
                pri_error_var,
                ..
            } = r.detail
            else {
                panic!("expected a TSR record");
            };
            let ratio = pri_error_var / v_b_pri;
            assert!(
                (ratio - 1.0).abs() < 0.1,
                "seed {seed} t={}: ratio {ratio}",
                r.iteration
            );
        }
    }
}

#[test]
fn tsr_prior_variance_is_non_increasing_without_clamps() {
    let prior = BernoulliGaussianPrior::new(0.4).unwrap();
    let inst = dft_instance(4096, 2867, 0.4, 1e-3, 11);
    let trace = run_tsr(
        &inst,
        &prior,
        &TsrConfig {
            t_max: 30,
            rel_tol: 0.0,
            ..TsrConfig::default()
        },
    )
    .unwrap();
    let v: Vec<(f64, usize)> = trace
        .records
        .iter()
        .map(|r| match r.detail {
            IterationDetail::Tsr { v_a_pri, .. } => (v_a_pri, r.clamp_events),
            _ => unreachable!(),
        })
        .collect();
    // At the fixed point the empirical variances jitter by ~1e-6 relative.
    for w in v.windows(2) {
        if w[1].1 == 0 {
            assert!(w[1].0 <= w[0].0 * (1.0 + 1e-5), "{} -> {}", w[0].0, w[1].0);
        }
    }
}

#[test]
fn tsr_tracks_state_evolution_on_a_large_instance() {
    let (n, m, sigma2) = (8192, 5734, 1e-3);
    let prior = BernoulliGaussianPrior::new(0.4).unwrap();
    let params = SeParams::new(n, m, sigma2, prior).unwrap();
    let se = se_tsr(&params).unwrap();
    let floor = db(se.converged_mse());
    let cfg = TsrConfig {
        t_max: 15,
        rel_tol: 0.0,
        ..TsrConfig::default()
    };
    let trials = 4;
    let mut mean_db = vec![0.0; cfg.t_max];
    for seed in 0..trials {
        let trace = run_tsr(&dft_instance(n, m, 0.4, sigma2, 100 + seed), &prior, &cfg).unwrap();
        for (acc, mse) in mean_db.iter_mut().zip(trace.mse()) {
            *acc += db(mse) / trials as f64;
        }
    }
    for (t, sim) in mean_db.iter().enumerate() {
        let pred = db(se.predicted_mse(t + 1));
        if pred <= floor + 0.1 {
            break;
        }
        assert!((sim - pred).abs() < 0.5, "t={}: {sim} vs {pred}", t + 1);
    }
}

fn amp_gap_to_se(onsager: bool) -> f64 {
    let (n, m, sigma2) = (1024, 717, 1e-3);
    let prior = BernoulliGaussianPrior::new(0.4).unwrap();
    let se = se_amp(&SeParams::new(n, m, sigma2, prior).unwrap()).unwrap();
    let cfg = AmpConfig {
        t_max: 8,
        rel_tol: 0.0,
        onsager,
        ..AmpConfig::default()
    };
    let trials = 8;
    let mut mean_db = vec![0.0; cfg.t_max];
    for seed in 0..trials {
        let trace = run_amp(&iid_instance(n, m, 0.4, sigma2, seed), &prior, &cfg).unwrap();
        for (acc, mse) in mean_db.iter_mut().zip(trace.mse()) {
            *acc += db(mse) / trials as f64;
        }
    }
    mean_db
        .iter()
        .enumerate()
        .map(|(t, sim)| (sim - db(se.predicted_mse(t + 1))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn amp_needs_the_onsager_term_to_follow_state_evolution() {
    let with = amp_gap_to_se(true);
    let without = amp_gap_to_se(false);
    assert!(with < 0.5, "with Onsager: {with} dB");
    assert!(without > 3.0, "without Onsager: {without} dB");
}

#[test]
fn tsr_needs_fewer_iterations_than_amp_on_the_same_dft_instance() {
    let prior = BernoulliGaussianPrior::new(0.4).unwrap();
    let inst = dft_instance(2048, 1434, 0.4, 1e-3, 3);
    let tsr = run_tsr(
        &inst,
        &prior,
        &TsrConfig {
            t_max: 40,
            rel_tol: 0.0,
            ..TsrConfig::default()
        },
    )
    .unwrap()
    .mse();
    let amp = run_amp(
        &inst,
        &prior,
        &AmpConfig {
            t_max: 40,
            rel_tol: 0.0,
            ..AmpConfig::default()
        },
    )
    .unwrap()
    .mse();
    let settle = |c: &[f64]| {
        let last = db(*c.last().unwrap());
        c.iter().position(|&v| db(v) <= last + 1.0).unwrap()
    };
    assert!(
        settle(&tsr) < settle(&amp),
        "{} vs {}",
        settle(&tsr),
        settle(&amp)
    );
}
