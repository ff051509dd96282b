//! Node-level optimal intervention against SIR rumor spreading on networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: network representation, edge-list ingestion, generators,
//!   topology statistics and the adjacency spectral radius.
//! - [`centrality`]: degree, betweenness, closeness, cycle number and cycle ratio.
//! - [`sir`]: controlled network SIR dynamics, RK4 integration and
//!   reproduction numbers.
//! - [`control`]: adjoint system, pointwise optimality map with budget
//!   enforcement, the objective and the forward–backward sweep solver.
//! - [`baselines`]: static and dynamic comparison allocation strategies.
//! - [`analysis`]: peak/area metrics, suppression efficiency and correlation series.

pub mod error;
pub mod centrality;
pub mod graph;
pub mod sir;
pub mod control;
pub mod baselines;
pub mod analysis;

pub use error::{Error, Result};
