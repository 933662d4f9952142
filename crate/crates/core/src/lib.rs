//! Stochastic hierarchical games and the solvers that compute their
//! equilibria.

pub mod bilevel;
pub mod error;
pub mod game;
pub mod mlmf;
pub mod report;
pub mod residual;
pub mod rng;
pub mod sg;
pub mod smoothing;
pub mod stats;
pub mod vrspp;

pub use error::{Error, Result};
pub use game::{FeasibleSet, GameOracle, OperatorSample, PlayerLayout, SetKind};
pub use rng::RandomStream;
pub use stats::{Estimate, MeanEstimate};
pub use report::{Cadence, IterateRecord, Monitor, RunReport};
