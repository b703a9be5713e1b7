//! Granger causality between *sets* of time series.
//!
//! The decision statistic for "set `j` Granger-causes set `i`" is the largest
//! partial canonical correlation between the present of set `i` and the
//! one-step lag of set `j`, after partialing out every other lagged series.
//! Significance comes from an overlapping-block bootstrap that resamples the
//! two sides independently. A blockwise VAR(1) Wald test is provided as the
//! classical baseline, together with the two simulated networks used to
//! compare them.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, the command-line
//! driver and the parallel Monte Carlo runner live in the `setgc` crate.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]
// `!(x > t)` is deliberate: NaN must take the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

extern crate alloc;

pub mod bootstrap;
pub mod error;
pub mod graph;
pub mod lagcov;
pub mod linalg;
pub mod panel;
pub mod pcca;
pub mod rng;
pub mod sim;
pub mod special;
pub mod var;

pub use bootstrap::{gc_test, make_blocks, resample_design, BlockLength, BootstrapConfig, GcTestResult, XStream};
pub use error::{Error, Result};
pub use graph::{build_graph, to_dot, SetGraph, Tier};
pub use lagcov::{assemble_blocks, conditional_cov, sample_cov, BlockCovariance, Conditioning, ConditionalCovariance, Ridge};
pub use panel::{lag_align, LaggedDesign, SetPartition, TimeSeriesPanel};
pub use pcca::{canonical_loadings, inv_sqrt_sym, partial_cca, solve_pcca, PccaResult};
pub use sim::{generate, DetectionMatrix, Method, SimKind, SimSpec};
pub use var::{fit_var1, wald_block_test, VarFit};

/// Dense matrix type used throughout.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;
