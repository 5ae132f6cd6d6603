//! Constrained convex generators (CCGs) and their roundabout differences
//! (RCGs): feasibility-based membership, closed set operations, rasters and
//! a command-line front end.

pub mod ccg_ops;
pub mod cli;
pub mod error;
pub mod feasibility;
pub mod json;
pub mod linalg;
pub mod oracle;
pub mod rcg_ops;
pub mod render;
pub mod set;

pub use error::{Result, SetError};
pub use feasibility::{ccg_empty, ccg_member, rcg_member, FeasibilityVerdict, SolverConfig, Status};
pub use set::{Ccg, Halfspace, LinearMap, Norm, NormGroup, Rcg};
