//! Monte Carlo experiments, property sweeps and report output.

pub mod config;
pub mod experiment;
pub mod properties;
pub mod report;

pub use config::{Algorithm, ExperimentConfig, RowSelection};
pub use experiment::run_experiment;
pub use properties::{run_property_suite, CheckKind, PropertyGrid, PropertyReport};
pub use report::{emit_report, AlgorithmCurve, CurvePoint, ExperimentReport, ReportFormat};
