pub mod cones;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod penalty;
pub mod quadrature;
pub mod rng;
pub mod solver;
