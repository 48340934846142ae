//! Periodic orbits of discrete-time multi-agent networks with saturated
//! inputs.
//!
//! Agents are identical double integrators or neutrally stable planar
//! systems, coupled through a diffusive relative-state controller over an
//! undirected weighted graph. The crate constructs initial states and gains
//! for which every agent stays saturated along a periodic orbit, simulates
//! the network (exactly, in rational arithmetic, or in `f64`), and checks
//! the result.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod io;
pub mod normalize;
pub mod orbit;
pub mod scalar;
pub mod verify;

pub use dynamics::{
    control_inputs, saturate, simulate, step_di, step_ns, AgentState, ClosedLoop, GainParams, Model, NsModel,
    Trajectory,
};
pub use error::{Error, Result};
pub use graph::{Class, Partition, WeightedGraph};
pub use normalize::normalize_ns;
pub use scalar::Scalar;

/// Exact scalar used throughout the acceptance path.
pub type Exact = num_rational::BigRational;
