//! Structured sparsity toolkit.
//!
//! Support sets are priced by a coding scheme: `c(F) = |F| + cl(F)`, where
//! `cl` is a prefix-code length in bits. The structured greedy solver
//! ([`structomp::struct_omp`]) grows a support one base block at a time,
//! picking the block with the best residual reduction per unit of added
//! complexity, until a complexity budget is exhausted.
//!
//! Around that solver the crate ships:
//!
//! - coding schemes (standard, non-uniform, group, graph, tree, block-induced)
//!   with Kraft and sub-additivity verifiers ([`coding`]);
//! - base-block dictionaries for lines, grids, groups and trees ([`blocks`]);
//! - OMP, Lasso and group-Lasso baselines ([`baselines`]);
//! - an orthonormal 2D Haar transform and its coefficient tree ([`wavelet`]);
//! - synthetic signal and design generators ([`signals`]);
//! - restricted-eigenvalue probes and an exhaustive constrained solver
//!   ([`eigen`]);
//! - a reproducible experiment runner behind the `structsparse` binary
//!   ([`experiment`], [`checks`]).

pub mod baselines;
pub mod blocks;
pub mod checks;
pub mod coding;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod signals;
pub mod structomp;
pub mod wavelet;

mod cover;

pub use blocks::{Block, BlockSet};
pub use coding::{Bits, CodingScheme, SchemeSpec};
pub use error::{Error, Result};
pub use linalg::{CoefficientVector, DesignMatrix, SupportSet};
pub use structomp::{struct_omp, GainMode, GreedyConfig, GreedyPath, GreedyState};
