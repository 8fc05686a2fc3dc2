//! Spectral measure spaces on grid models, direct integrals, Dirac kets, and
//! limits of approximate functionals that carry one ket expansion into another.

pub mod differentiation;
pub mod direct_integral;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod measure;
pub mod rigging;
pub mod scalar;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{Grid1D, Interval, IntervalSet};
pub use measure::{ComplexMeasure, DensityMeasure, GridMeasure};
pub use scalar::{Scalar, C64};
