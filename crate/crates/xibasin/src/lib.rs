//! Root finding and basins of attraction for meromorphic functions via
//! Backtracking New Q-Newton's method, with the Riemann xi function and the
//! heat-flow family H_t as the main targets.

pub mod atlas;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{BigComplex, PrecisionContext, Real};
