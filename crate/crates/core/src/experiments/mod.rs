//! Scenario files, the built-in formula table, and the experiment runner.

pub mod build;
pub mod bundled;
pub mod catalog;
pub mod config;
pub mod run;

pub use build::{build_scenario, change_of_variables, fourier_quadrature};
pub use bundled::{bundled, list_scenarios, BUNDLED};
pub use catalog::{Formula, Term, FORMULA_IDS};
pub use config::{load_scenario, parse_scenario, Expect, Metric, ReferenceId, ScenarioConfig, SweepSpec, Tolerances, UnitaryId};
pub use run::{error_kind, run, write_outputs, PropertyResult, RunReport, SweepOutcome};
