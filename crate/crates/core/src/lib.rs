//! Swing-equation response of lossless power grids to exponentially correlated
//! power fluctuations, and the primary control effort they cause.
//!
//! Pipeline: [`grid`] (data model and parameters) → [`equilibrium`] (operating
//! point) → [`spectral`] (normalized Laplacian eigenmodes) → [`stochastic`]
//! (disturbance paths) → [`dynamics`] (time integration) → [`metrics`] and
//! [`ensemble`] (effort and its statistics). [`workflow`] strings them together.

pub mod dynamics;
pub mod ensemble;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod spectral;
pub mod stochastic;
pub mod workflow;

pub use error::{Error, Result};
pub use grid::{
    assign_parameters, load_grid, parse_grid, serialize_grid, Bus, BusId, BusKind, DynamicParams,
    GridFormat, GridNetwork, Line, ParameterOptions, ParameterScheme, UnitSystem,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
