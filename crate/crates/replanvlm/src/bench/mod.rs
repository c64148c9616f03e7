//! Task catalog, suite/ablation/error-injection runners, metrics, and
//! report export.

mod export;
mod metrics;
mod suite;
mod tasks;

pub use export::{export, load_csv, ExportFormat};
pub use metrics::{MetricsTable, TaskMetrics};
pub use suite::{
    injection_step_for, run_ablation, run_error_correction, run_suite, AblationVariant,
    HarnessError, SuiteConfig, SuiteReport,
};
pub use tasks::{catalog, load_scenario_by_path, CriteriaFlags, TaskSpec};
