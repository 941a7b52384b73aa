//! Morley finite elements for the stream-function formulation of the stationary
//! Navier-Stokes equations, with computable existence and uniqueness certificates.

pub mod assembly;
pub mod certify;
pub mod cli;
pub mod error;
pub mod hct;
pub mod mesh;
pub mod morley;
pub mod pwpoly;
pub mod quadrature;
pub mod report;
pub mod solve;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
