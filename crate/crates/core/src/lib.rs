//! Numerical laboratory for the change-of-variables method on one-cut
//! β-ensembles: equilibrium densities, the transport map to the semicircle,
//! the deformation kernel, samplers, and the CLT and bulk checks.

pub mod cheb;
pub mod ensembles;
pub mod equilibrium;
pub mod error;
pub mod func;
pub mod ode;
pub mod operators;
pub mod pipeline;
pub mod potentials;
pub mod quad;
pub mod series;
pub mod stats;
pub mod transport;
pub mod universality;

pub use error::{Error, Result};
