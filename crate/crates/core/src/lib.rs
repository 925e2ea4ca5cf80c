//! Joint routing and charging of electric truck fleets: the time-expanded
//! model, exact per-truck subproblems, surrogate level-based Lagrangian
//! coordination, and an independent verifier / brute-force oracle.

pub mod coordinator;
pub mod error;
pub mod gen;
pub mod instance;
pub mod lpfeas;
pub mod model;
pub mod scalar;
pub mod schedule;
pub mod subproblem;
pub mod verify;

pub use error::{Error, Result};
pub use instance::{Compiled, Instance};
pub use scalar::Scalar;

/// Multipliers over the default scalar.
pub type Multipliers = coordinator::Multipliers<f64>;
/// Exact-rational multipliers, for arithmetic checks.
pub type ExactMultipliers = coordinator::Multipliers<num_rational::BigRational>;
pub type LevelState = coordinator::LevelState<f64>;
pub type LinearSystem = lpfeas::LinearSystem<f64>;
