//! Soliton dynamics for the nonlinear Schrödinger equation with an external
//! potential: ground states, split-step evolution, soliton/wave
//! decomposition, halo terms and the point-particle limit.

pub mod classical;
pub mod error;
pub mod evolution;
pub mod ground_state;
pub mod model;
pub mod observables;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    ComplexField, Model, NonlinearitySpec, PhysicalParams, PotentialSpec, RealField, SpatialGrid,
};
