//! Numerical toolkit for finite reversible Markov semigroups.
//!
//! The crate builds generators on finite probability spaces, evaluates
//! p-log-Sobolev functionals and estimates their optimal constants, searches
//! for counterexamples to forward and reverse hypercontractive inequalities,
//! and carries the downstream applications: two-set mixing bounds,
//! correlated-set bounds, Boolean influence machinery and dice distillation.
//!
//! ```
//! use std::sync::Arc;
//! use revhyp::measure::ProbabilitySpace;
//! use revhyp::semigroup::{Generator, Semigroup};
//!
//! let space = Arc::new(ProbabilitySpace::uniform(2).unwrap());
//! let g = Generator::simple(space);
//! assert!((g.spectral_gap().unwrap().value - 1.0).abs() < 1e-12);
//! ```

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::len_without_is_empty,
    clippy::needless_range_loop
)]

pub mod chains;
pub mod error;
pub mod hypercon;
pub mod io;
pub mod logsob;
pub mod measure;
pub mod mixing;
pub mod nicd;
pub mod numeric;
pub mod optimize;
pub mod rng;
pub mod semigroup;
pub mod social_choice;

pub use error::{Error, Result};
