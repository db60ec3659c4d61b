//! Finite-graph companion to the dimension pipeline (non-certified).
//!
//! Level graphs of the Sierpinski triangle, their Dirichlet spectra and the
//! decimation recursion between consecutive levels, together with backward
//! orbits of the decimation map and samples of its Julia set.

mod graph;
mod orbit;

pub use graph::*;
pub use orbit::*;
