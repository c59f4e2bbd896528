//! Rigorous-numerics toolkit for the cohomogeneity-one Einstein shooting
//! problem on spheres: a heuristic arbitrary-precision Taylor solver,
//! Chebyshev interpolation with ball-arithmetic a posteriori error bounds,
//! shooting with Broyden's method, finite-difference linearization, and the
//! final certificate inequality chain.

pub mod error;
pub mod precision;
pub mod certify;
pub mod chebyshev;
pub mod shooting;
pub mod system;
pub mod verify;
pub mod taylor;

pub use error::{Error, Result};
