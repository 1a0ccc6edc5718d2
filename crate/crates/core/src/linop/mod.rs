//! Dense operators on labelled finite bases.

mod op;
mod space;
mod spectrum;

pub use op::{
    block, commutator, direct_sum, eig_hermitian, eig_hermitian_with, eigh, hermitian_defect, kron, matmul,
    opnorm, opnorm_mat, tensor, top_singular_triplet, EigOptions, LinOp, DEFAULT_DIM_CAP,
    HERMITIAN_TOL,
};
pub use space::{BasisLabel, BasisSpace, SpaceKind};
pub use spectrum::{multiset_distance, Spectrum, DEFAULT_MERGE_TOL};
