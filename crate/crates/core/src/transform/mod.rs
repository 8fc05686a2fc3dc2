//! Carrying coordinates from one spectral measure space to another through
//! limits of approximate functionals.

mod drivers;
mod functional;
mod record;
mod scenario;

pub use drivers::{
    calculus_set, cross_measure_identity, decomposable_transform, fiber_projections, ket_transform_limit,
    loglog_slope, martingale_sets, martingale_transform, simple_spectrum_transform, strong_divergence_diagnostic,
    vitali_transform_limit, Argument, CrossMeasure, DivergenceTrail, FORM_TOL,
};
pub use functional::ApproxFunctional;
pub use record::{ConvergenceRecord, Flavor, RecordRow, CSV_HEADER};
pub use scenario::{QSide, TransformScenario, COMMUTATION_TOL};
