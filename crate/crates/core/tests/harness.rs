use tsr_core::harness::report::{read_json_report, to_csv_string, CSV_HEADER};
use tsr_core::harness::{
    emit_report, run_experiment, Algorithm, ExperimentConfig, ExperimentReport, ReportFormat,
    RowSelection,
};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 256,
        trials: 6,
        t_max: 30,
        master_seed: 17,
        ..ExperimentConfig::default()
    }
}

#[test]
fn csv_has_one_row_per_algorithm_and_iteration() {
    let report = run_experiment(&small_config()).unwrap();
    let csv = to_csv_string(&report).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 90);
    // amp-dft has no state-evolution prediction: trailing field empty
    let dft_row = rows.iter().find(|r| r.starts_with("amp-dft,")).unwrap();
    assert!(dft_row.ends_with(','));
    let tsr_row = rows.iter().find(|r| r.starts_with("tsr-dft,")).unwrap();
    assert!(!tsr_row.ends_with(','));
}

#[test]
fn empty_report_gives_header_only_csv() {
    let mut report = run_experiment(&ExperimentConfig {
        trials: 1,
        t_max: 2,
        ..small_config()
    })
    .unwrap();
    report.curves.clear();
    let csv = to_csv_string(&report).unwrap();
    assert_eq!(csv, format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn json_round_trip_reproduces_the_report() {
    let report = run_experiment(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_report(&report, ReportFormat::Json, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    let back: ExperimentReport = read_json_report(&path).unwrap();
    assert_eq!(back, report);

    let csv_path = dir.path().join("report.csv");
    emit_report(&report, ReportFormat::Csv, &csv_path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&csv_path).unwrap(),
        to_csv_string(&report).unwrap()
    );
}

#[test]
fn serial_and_parallel_runs_agree() {
    for row_selection in [RowSelection::PerTrial, RowSelection::Fixed] {
        let cfg = ExperimentConfig {
            row_selection,
            ..small_config()
        };
        let parallel = run_experiment(&cfg).unwrap();
        let serial = run_experiment(&ExperimentConfig {
            parallel: false,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(
            to_csv_string(&parallel).unwrap(),
            to_csv_string(&serial).unwrap()
        );
        assert_eq!(parallel.curves, serial.curves);
    }
}

#[test]
fn repeated_single_trial_runs_are_byte_identical() {
    let cfg = ExperimentConfig {
        trials: 1,
        ..small_config()
    };
    let a = to_csv_string(&run_experiment(&cfg).unwrap()).unwrap();
    let b = to_csv_string(&run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = to_csv_string(
        &run_experiment(&ExperimentConfig {
            master_seed: 18,
            ..cfg
        })
        .unwrap(),
    )
    .unwrap();
    assert_ne!(a, other);
}

#[test]
fn doubling_trials_shrinks_standard_error_by_root_two() {
    let base = ExperimentConfig {
        n: 256,
        t_max: 12,
        algorithms: vec![Algorithm::TsrDft, Algorithm::AmpIid],
        master_seed: 4,
        ..ExperimentConfig::default()
    };
    let small = run_experiment(&ExperimentConfig {
        trials: 100,
        ..base.clone()
    })
    .unwrap();
    let large = run_experiment(&ExperimentConfig {
        trials: 200,
        ..base
    })
    .unwrap();
    let mut ratios = Vec::new();
    for (a, b) in small.curves.iter().zip(&large.curves) {
        for (p, q) in a.points.iter().zip(&b.points) {
            ratios.push(p.stderr_db / q.stderr_db);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let target = 2f64.sqrt();
    assert!((mean / target - 1.0).abs() < 0.2, "mean ratio {mean}");
}

#[test]
fn independent_instances_change_only_the_iid_curve() {
    let cfg = ExperimentConfig {
        trials: 3,
        t_max: 5,
        ..small_config()
    };
    let shared = run_experiment(&cfg).unwrap();
    let independent = run_experiment(&ExperimentConfig {
        shared_instances: false,
        ..cfg
    })
    .unwrap();
    assert_eq!(
        shared.curve(Algorithm::TsrDft),
        independent.curve(Algorithm::TsrDft)
    );
    assert_ne!(
        shared.curve(Algorithm::AmpIid),
        independent.curve(Algorithm::AmpIid)
    );
}

#[test]
fn square_system_has_no_state_evolution_column() {
    let mut cfg = ExperimentConfig {
        n: 64,
        trials: 2,
        t_max: 3,
        algorithms: vec![Algorithm::TsrDft],
        ..ExperimentConfig::default()
    };
    cfg.set_m(64);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.curves[0]
        .points
        .iter()
        .all(|p| p.se_pred_mse_db.is_none()));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run_experiment(&ExperimentConfig {
        trials: 0,
        ..small_config()
    })
    .is_err());
    assert!(run_experiment(&ExperimentConfig {
        lambda: 1.5,
        ..small_config()
    })
    .is_err());
    let mut cfg = small_config();
    cfg.set_m(300);
    assert!(run_experiment(&cfg).is_err());
}
