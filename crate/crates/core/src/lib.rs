//! Structure learning for binary continuous-time Bayesian networks.
//!
//! Trajectories are reduced to sufficient statistics under the full-parent
//! model, each `(node, transition)` pair is fitted by an L1-penalized
//! log-linear intensity regression along a penalty path, and edges are read
//! off the selected and thresholded coefficients.

pub mod chain;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod seed;
pub mod select;
pub mod simulate;
pub mod solver;
pub mod stats;
pub mod theory;

pub use error::{CtbnError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
