//! Analysis toolkit for the pairwise group-testing algorithm.
//!
//! The algorithm classifies a pool of independently defective items by
//! always testing a pair of unresolved items together, following up a
//! contaminated pair with one individual test. This crate provides four
//! mutually cross-checking views of its random test count:
//!
//! - [`simulator`]: a faithful trace-producing state machine plus two
//!   closed-form pathwise evaluators and a parallel Monte Carlo harness;
//! - [`exactdist`]: the exact distribution of the count by polynomial
//!   propagation of its generating function (linear, log-domain, and
//!   rational arithmetic);
//! - [`analytic`]: closed-form moment generating function and
//!   mean/variance formulas, with an independent block-matrix evaluation;
//! - [`asymptotics`]: the limiting constants of `T_n / n` and its
//!   large-deviation rate function via a Legendre transform.
//!
//! ```
//! use pta::{exactdist, ContaminationModel};
//!
//! let m = ContaminationModel::new(0.3)?;
//! let pmf = exactdist::exact_pmf(&m, 2)?;
//! assert!((pmf.prob(1) - 0.49).abs() < 1e-12);
//! assert!((pmf.prob(3) - 0.30).abs() < 1e-12);
//! # Ok::<(), pta::Error>(())
//! ```

pub mod analytic;
pub mod asymptotics;
mod error;
pub mod exactdist;
mod logsum;
pub mod model;
pub mod simulator;

pub use error::{Error, Result};
pub use model::ContaminationModel;

/// Runs every code snippet in the user guide as a doc-test, so the book
/// in `book/` can never drift from the library it documents.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/procedure.md")]
    struct Procedure;
    #[doc = include_str!("../../../book/src/distribution.md")]
    struct Distribution;
    #[doc = include_str!("../../../book/src/generating-functions.md")]
    struct GeneratingFunctions;
    #[doc = include_str!("../../../book/src/limits.md")]
    struct Limits;
    #[doc = include_str!("../../../book/src/command-line.md")]
    struct CommandLine;
    #[doc = include_str!("../../../book/src/cross-validation.md")]
    struct CrossValidation;
}
