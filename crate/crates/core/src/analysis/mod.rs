//! Spectral checks, dimension estimates, sampled bound checks and sweeps.

pub mod bounds;
pub mod dimension;
pub mod eigs;
pub mod sampling;
pub mod structured;
pub mod sweep;

pub use bounds::{
    check_bound_3y, check_bound_7, check_nondegeneracy, distance_from_scalars, Bound3YReport, Bound7Report,
    BoundCheck, LadderRung, NondegeneracyReport, Violation, BOUND_TOL,
};
pub use dimension::{estimate_spectral_dimension, DimensionEstimate, WindowPolicy};
pub use eigs::{d1_formula, di_formula, primed, verify_d1_eigs, verify_di_eigs, EigCheck};
pub use sampling::{sample_stream, SampleBasis, SamplingConfig};
pub use structured::{
    circle_eigenvalues, descriptor_lists, structured_eigs, structured_from_lists, Certification, SpectrumTarget,
    StructuredFamily, TrustChain,
};
pub use sweep::{commutator_norm_sweep, SweepFamily, SweepRow, SweepTable};
