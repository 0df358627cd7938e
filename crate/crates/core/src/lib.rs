//! Exact and hybrid solvers for joint placement of two UAV base stations and
//! per-slice (eMBB / URLLC / mMTC) bandwidth allocation.
//!
//! The pipeline is:
//!
//! - [`instance`] generates seeded user layouts on a square service area with a
//!   grid of candidate UAV positions.
//! - [`channel`] holds the physical model: received power, SINR and the
//!   Shannon rate of an equal share of a slice band.
//! - [`evaluator`] scores a `(Placement, Allocation)` pair: nearest-UAV
//!   association, per-slice equal split, satisfaction and coverage.
//! - [`bwopt`] computes the optimal bandwidth split for a fixed placement.
//! - [`solver`] enumerates candidate placement pairs (optionally pruned by the
//!   convex hulls of [`geometry`]) and returns the global optimum.
//! - [`agents`] wraps the solver, external position/bandwidth predictors and a
//!   few baselines behind a single interface; [`bench`] compares them.

pub mod agents;
pub mod bench;
pub mod bwopt;
pub mod channel;
pub mod cli;
pub mod error;
pub mod evaluator;
pub mod geometry;
pub mod instance;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
