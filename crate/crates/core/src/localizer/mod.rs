//! Absolute position estimation from crater fixes.
//!
//! Heading is taken as known; only the 2D position and its covariance are
//! estimated. Dead-reckoning drift grows with distance since the last fix.

mod associate;
mod bias;
mod model;
mod propagate;
mod state;
mod traverse;
mod update;

pub use associate::{associate, associate_weighted, AssociationConfig, Match, MatchSet};
pub use bias::LandmarkBiasFilter;
pub use model::{MeasurementModel, SigmaTable};
pub use propagate::{drift_variance, propagate, OdometrySegment};
pub use state::RoverState;
pub use traverse::{
    read_route, route_length, run_traverse, write_route, TraverseConfig, TraverseLog, TraverseStep, TraverseWorld,
};
pub use update::{implied_position, update};
