//! Structural complexity metrics for high-dimensional data and a
//! dataset-adaptive workflow for optimizing dimensionality reduction.
//!
//! The crate is organized bottom-up:
//!
//! - [`data`]: dataset loading, validation, subsampling and synthetic generators
//! - [`distance`]: dense Euclidean distances, neighbor rankings and rank matrices
//! - [`complexity`]: Pairwise Distance Shift (PDS), Mutual Neighbor Consistency
//!   (MNC) and the combined feature vector
//! - [`drtech`]: built-in projection techniques plus an external plugin protocol
//! - [`quality`]: scale-invariant projection quality metrics
//! - [`regress`]: regressors mapping complexity features to achievable accuracy
//! - [`optimize`]: random search and Bayesian optimization with early stopping
//! - [`workflow`]: pretraining, adaptive and conventional workflows, comparison
//!
//! All randomized code paths take an explicit `u64` seed and use ChaCha8, so
//! results replicate across platforms and worker counts.

pub mod complexity;
pub mod data;
pub mod distance;
pub mod drtech;
pub mod error;
pub mod optimize;
pub mod quality;
pub mod regress;
pub mod report;
pub mod rng;
pub mod workflow;

pub use error::{Error, Result};

/// Schema tag carried by every structured report.
pub const SCHEMA: &str = "dradapt/1";
