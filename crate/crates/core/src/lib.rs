//! Simulation and verification toolkit for the one-state dynamic molecular
//! switch: transport integrals, switching rates, exact propagation of the
//! rate equation, and numerical checks of its convergence and fading-memory
//! properties.

pub mod dynamics;
pub mod error;
pub mod interp;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod transport;
pub mod verify;

pub use error::{DmsError, Result};
pub use model::{DomainBounds, MolecularState, RateModel, RateSet, SwitchModel, SwitchParams};
pub use quadrature::{IntegralResult, Method, QuadratureSpec};
