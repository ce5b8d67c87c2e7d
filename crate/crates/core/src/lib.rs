//! Spectral analysis of the damped Schrodinger operator on the tadpole graph:
//! a half-line attached to a loop of length L, with a dissipative vertex
//! condition of strength alpha.

pub mod error;
pub mod evolution;
pub mod figure2;
pub mod graph;
pub mod secular;
pub mod modes;
pub mod oracle;
pub mod resolvent;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{GraphFunction, GraphParams, GraphPoint, Edge, C64};
