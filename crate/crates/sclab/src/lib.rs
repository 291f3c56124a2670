//! Numerical laboratory for symplectic connections.
//!
//! The crate evaluates everything through truncated Taylor jets, so that
//! curvature, covariant derivatives and Lie-theoretic checks are exact up to
//! rounding rather than finite-difference noise.

pub mod connlab;
pub mod error;
pub mod jets;
pub mod linalg;
pub mod parallel;
pub mod induction;
pub mod reduction;
pub mod twistor;
pub mod wkb;

pub use error::{Error, Result};
