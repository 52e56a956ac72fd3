//! Coordination algorithms for ultra-dense small-cell wireless networks.
//!
//! The crate solves the joint *pairing* (which access node serves which
//! user), *partitioning* (which orthogonal resource slice each pair uses) and
//! *power* problem that maximizes the common SINR every user can be served
//! at.
//!
//! - [`network`]: random deployments and noise-normalized path gains.
//! - [`power`]: per-partition max-min power control through the Perron root,
//!   Perron-root bounds and SINR/rate bookkeeping.
//! - [`exact`]: exact solvers (bisection over an assignment search) and a
//!   big-M ILP exporter with an independent constraint checker.
//! - [`greedy`]: power-aware and power-unaware greedy partitioners and the
//!   full-reuse / full-orthogonalization baselines.
//! - [`harness`]: seeded Monte Carlo scenarios with CSV/JSON output.

pub mod error;
pub mod exact;
pub mod greedy;
pub mod harness;
pub mod network;
pub mod power;

pub use error::{CoordError, Result};
pub use exact::{Assignment, CoordinationSolution, SolverStats};
pub use network::{Deployment, NetworkInstance, SystemConfig};
pub use power::{PartitionGroup, PerronBoundParams, PowerVector};
