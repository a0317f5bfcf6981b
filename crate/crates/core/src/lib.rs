//! Budget-constrained random disambiguation path planning.
//!
//! Disk obstacles of uncertain status are laid over a unit lattice. Each edge carries a
//! risk-adjusted cost and a disambiguation weight; a weight-constrained shortest path
//! solver with Lagrangian relaxation and vertex elimination produces plans, and online
//! policies execute them against a hidden ground truth.

pub mod cli;
pub mod cologr;
pub mod env;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod lattice;
pub mod policy;
pub mod report;
pub mod risk;
pub mod spp;

pub use cologr::{cologr_solve, sne_solve, SolveReport, SolveStatus};
pub use env::{Environment, Knowledge, Obstacle, ObstacleStatus, Region};
pub use error::{RcdpError, Result};
pub use geometry::{segment_intersects_disk, Point};
pub use graph::{AdjustedGraph, WeightRule};
pub use lattice::{LatticeGraph, VertexId};
pub use risk::{RiskModel, SensorModel};
pub use spp::{PathSolution, Valuation};
