//! Brownian motion, local time and pathwise stochastic integrals built from
//! nested simple random walks.

pub mod calculus;
pub mod coin;
pub mod embedding;
pub mod error;
pub mod function;
pub mod harness;
pub mod integrals;
pub mod local_time;
pub mod martingale;
pub mod path;
pub mod predictable;
pub mod walks;

pub use coin::{derive_seed, CoinMatrix, Seed};
pub use error::{Error, Result};
pub use function::GridFunction;
pub use path::PiecewisePath;
pub use walks::{build_nested, LatticePath, LatticeWalk, NestedConfig, NestedWalks};
