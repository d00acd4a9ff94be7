//! Online learning with interval-constrained losses: exponential weights,
//! the constrained multiplicative-weights algorithm and its inner solvers,
//! an adversarial environment, and the experiment drivers.

pub mod adversary;
pub mod cli;
pub mod curvature;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod game;
pub mod hedge;
pub mod solvers;
pub mod verify;

pub use engine::{CmwConfig, CmwEngine, CmwState, Proposal, RegretBound};
pub use error::{CmwError, Result};
pub use game::{BoxConstraint, Distribution, GameHistory, LossVector};
pub use hedge::HedgeState;
pub use solvers::{SolverKind, SolverOutcome};
