//! Task-and-motion planning in a 2D pick-and-place world, and Bayesian inverse planning of the
//! goal programs behind demonstrations.

pub mod dsl;
pub mod inverse;
pub mod proposer;
pub mod tamp;
pub mod terc;
pub mod world;
