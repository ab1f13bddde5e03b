//! Toolkit for studying performance prediction of configurable software.
//!
//! The crate covers the full experimental loop:
//!
//! * [`space`] describes configuration spaces (binary and numeric options plus
//!   constraints) and measurement tables.
//! * [`binsample`] and [`numsample`] select learning configurations from the
//!   binary and numeric sub-spaces.
//! * [`learners`] trains regression models (multiple linear regression with
//!   feature-subset selection, CART, random forests, k-nearest neighbours,
//!   kernel ridge regression, and epsilon-SVR).
//! * [`tuning`] searches hyper-parameter spaces with seeded random search and
//!   k-fold cross-validation.
//! * [`evaluation`] computes error rates, stability ranges, significance tests
//!   and Pareto fronts over experiment results.
//! * [`harness`] wires everything into reproducible experiment grids.
//!
//! All randomness flows through the documented generator in [`rng`], so any
//! run is byte-for-byte reproducible from its seeds, including under the
//! data-parallel execution enabled by the `parallel` feature.

pub mod binsample;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod learners;
pub mod numsample;
pub mod parallel;
pub mod rng;
pub mod space;
pub mod tuning;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
