//! Spectral measure spaces `(Λ, 𝒜, ℋ, P)` realized on grids.

pub mod carrier;
pub mod generating;
pub mod map;
pub mod model;

pub use carrier::{Carrier, HilbertVector, MultiplicityProfile};
pub use generating::{
    decompose_vector, multiplicity_function, probe_vectors, reconstruct, verify_generating_system,
    GeneratingSystem, GsOptions, MultiplicityFunction, Verdict, VerificationReport,
};
pub use map::{FiberUnitary, Label, Node};
pub use model::{commutator_defect, Layout, SpectralModel, Variant};
