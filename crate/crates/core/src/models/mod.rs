//! Truncated spectral triples and Toeplitz-type extension models.

pub(crate) mod conditions;
mod descriptor;
mod extension;
mod spheres;
mod triple;

pub use conditions::{check_toeplitz_conditions, GeneratorConditions, ToeplitzReport};
pub use descriptor::{BuiltModel, ModelDescriptor, ModelKind};
pub use extension::{ExtensionModel, Family, GeneratorSpec, RelationResidual, SplitElement};
pub use spheres::{bare_model, podles_model, suq2_model, toeplitz_model};
pub use triple::{bilateral_shift, circle_triple, point_triple, two_point_triple, TripleModel};
