//! Simulation and verification toolkit for extremes of randomly weighted
//! sums and maxima of heavy-tailed stationary series.
//!
//! The crate is organized bottom-up:
//!
//! - [`heavy_tail`]: Pareto laws, threshold sequences and row-cap bounds.
//! - [`generators`]: stationary columns with a chosen tail index and
//!   extremal index, random row lengths, and whole series matrices.
//! - [`aggregation`]: weighted row sums and maxima of a matrix.
//! - [`estimators`]: Hill, intervals, blocks and replicate-based extremal
//!   index estimates, KS diagnostics and bootstrap reports.
//! - [`network`]: community graphs, PageRank and Max-Linear solvers, and
//!   root score sequences.
//! - [`experiment`]: configuration files, verification pipelines and
//!   verdict reports.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod generators;
pub mod heavy_tail;
pub mod network;
pub mod seed;

pub use error::{Error, Result};
