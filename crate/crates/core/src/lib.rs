//! Matched filtering for graphs: locate noisy copies of a small template
//! graph inside a large background graph.
//!
//! The pipeline is
//!
//! 1. pad template and background adjacency matrices ([`graph`]),
//! 2. maximize the relaxed quadratic matching objective with a
//!    Frank-Wolfe scheme over doubly stochastic matrices ([`fw`]),
//!    using a reduced linear assignment solver for the direction
//!    subproblem ([`lap`]),
//! 3. down-weight node similarities at already-recovered matches and
//!    re-run, so that repeated solves surface distinct embedded copies
//!    ([`diversify`]).
//!
//! The [`mcer`] module samples synthetic problem instances with
//! correlated template copies and provides closed-form expectations
//! used to sanity-check recovered solutions.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod diversify;
pub mod error;
pub mod fw;
pub mod graph;
pub mod lap;
pub mod mat;
pub mod mcer;
pub mod rng;

pub use error::Error;

/// Convenience alias: every fallible operation in this crate returns this.
pub type Result<T> = core::result::Result<T, Error>;
