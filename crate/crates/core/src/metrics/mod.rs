//! Lipschitz seminorm, states and Connes distances.

pub mod distance;
pub mod state;
pub mod sweep;

pub use distance::{
    connes_distance, diameter_estimate, seminorm_l, seminorm_l_dense, triple_basis, triple_seminorm, DistanceOptions,
    DistanceResult, Geometry, LipschitzProblem,
};
pub use state::{Rep, State};
pub use sweep::{q_grid, q_sweep, QSweepRow, QSweepTable, SphereFamily, StatePair};
