//! Experiment orchestration: configuration, trial dispatch, CSV output and
//! scaling fits.

mod config;
mod fit;
mod record;
mod run;
mod verify;

pub use config::{ExperimentConfig, ExperimentKind};
pub use fit::{fit_loglog, LogLogFit};
pub use record::{format_float, write_csv, TrialRecord, CSV_COLUMNS, CSV_SCHEMA_VERSION};
pub use run::{accuracy_scaling_fit, execute, qpe_config, run, CellSummary, RunReport};
pub use verify::{
    preparation_distance, averaged_success_grid, copy_budget_examples, grover_fidelity, helstrom_suite,
    verify_formulas, Check, VerifyReport, AVERAGED_TOL, GROVER_TOL,
};
