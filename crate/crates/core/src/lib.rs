//! Characteristic function of arg zeta(sigma+it) on vertical lines and the
//! densities of t where Re zeta(sigma+it) < 0 or |arg zeta| > pi/2, to
//! arbitrary precision.

pub mod charfun;
pub mod checks;
pub mod cli;
pub mod density;
pub mod error;
pub mod ifunc;
pub mod mcverify;
pub mod numerics;
pub mod primes;
pub mod qpoly;

pub use error::{Error, Result};
/// The arbitrary precision float used throughout the public API.
pub use rug::Float;
