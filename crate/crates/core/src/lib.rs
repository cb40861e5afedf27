//! Hartman-Watson density: special functions, saddle point, asymptotic
//! expansions, Bromwich inversion and the Asian option density built on top.

pub mod asian;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod inversion;
pub mod quadrature;
pub mod saddle;
pub mod specfun;

pub use asymptotics::{DensityMethod, LogDensity};
pub use error::{HwError, Result};
pub use specfun::{HwParams, LogComplex};
