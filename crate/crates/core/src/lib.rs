//! Variance-weighted least-squares mirror-descent value iteration for linear
//! MDPs with a generative model.
//!
//! - [`linear_mdp`]: linear MDPs, the hard two-state instance, sampling and
//!   exact dynamic-programming oracles.
//! - [`design`]: weighted G-optimal designs (Kumar-Yildirim initialization,
//!   Frank-Wolfe, core-set pruning) and weighted least-squares projection.
//! - [`mdvi`]: Tabular MDVI, WLS-MDVI, variance estimation and VWLS-MDVI.
//! - [`registry`]: the solver strategies, selectable by name.
//! - [`harness`]: seeded multi-MDP experiments, CSV output and summaries.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod harness;
pub mod linear_mdp;
pub mod mdvi;
pub mod registry;
pub mod rng;

pub use error::{Error, Result};
