//! Surface calculus on evolving closed surfaces: chart geometry, surface
//! operators, flow maps, fluid-system residuals, grid solvers and
//! variational checks.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod ad;
pub mod config;
pub mod error;
pub mod evolving;
pub mod expr;
pub mod families;
pub mod field;
pub mod fluid;
pub mod geometry;
pub mod laws;
pub mod linalg;
pub mod manufactured;
pub mod runner;
pub mod solvers;
mod suites;
pub mod surface_ops;
pub mod variational;

pub use error::{Error, Result};
