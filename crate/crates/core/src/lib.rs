//! Formation, velocity and power planning for two-drone bistatic InSAR missions.
//!
//! The planner maximises interferometric ground coverage subject to coherence,
//! height-accuracy, data-offloading and battery constraints. See the `examples/`
//! directory for one runnable program per capability.

pub mod comms;
pub mod constraints;
pub mod ao;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod insar;
pub mod monotonic;
pub mod pso;
pub mod sca;
pub mod scenario;
pub mod special;

pub use error::{PlanError, Result};
