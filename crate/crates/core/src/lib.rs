//! Certified Hausdorff dimension bounds for the Julia sets of spectral
//! decimation maps.

pub mod ball;
pub mod bounds;
pub mod error;
pub mod branch;
pub mod certificate;
pub mod certify;
pub mod chebyshev;
pub mod decimal;
pub mod driver;
pub mod jet;
pub mod lab;

pub use ball::Ball;
pub use error::{Error, Result};
