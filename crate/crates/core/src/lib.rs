//! FDR thresholding studied as a classification rule in sparse two-group
//! mixtures.
//!
//! Observations are either null (label 0) with a known ζ-Subbotin density or
//! signal (label 1), obtained from the null by a location shift or a scale
//! inflation. After standardization to p-values the library provides the
//! Bayes, BFDR and FDR thresholds, deterministic and exact FDR
//! misclassification risks, the finite-sample oracle bounds that dominate
//! their excess risk, and Monte Carlo machinery to cross-check all of it.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod model;
pub mod risk;
pub mod simulate;
pub mod subbotin;
pub mod threshold;

mod solve;
mod special;

pub use error::{Error, Result};
pub use subbotin::SubbotinShape;
