//! Numerical Bergman geometry on pseudoconvex model domains.

pub mod cli;
pub mod domains;
pub mod error;
pub mod fridman;
pub mod geodesics;
pub mod jet;
pub mod kernel;
pub mod metric;
pub mod ode;
pub mod points;
pub mod quadrature;
pub mod scaling;

pub use error::{Error, Result};
