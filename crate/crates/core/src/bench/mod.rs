//! Benchmark harness: case configuration, registry, runs, convergence studies and reports.

mod analytic;
mod checks;
mod config;
mod csvio;
mod registry;
mod run;

pub use analytic::{halton_points, AnnulusBending, LameStress};
pub use checks::{check_spacing, property_checks, PropertyCheck};
pub use config::{
    Analysis, CaseConfig, DiscretizationConfig, DomainConfig, HoleConfig, KNorm, LoadConfig, OuterConfig, OutputConfig,
    ReportConfig, SolverConfig, StressSolver, TractionConfig,
};
pub use csvio::{read_csv, write_csv};
pub use registry::*;
pub use run::{
    emit_field, exact_deflection, exact_stress, grid_points, run_case, run_convergence, solve_stress, CaseRun,
    ConvergenceReport, ConvergenceRow, Reference, StressSource, Summary,
};
