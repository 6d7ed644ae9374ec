//! Experiments on integer polynomials with small values: dyadic families
//! classified by discriminant, sublevel-set covers, Hausdorff cover sums
//! and series-convergence diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod covers;
pub mod error;
pub mod families;
pub mod fit;
pub mod functions;
pub mod lemmas;
pub mod measures;
pub mod polycore;
pub mod series;

pub use error::{LabError, Result};
pub use polycore::IntPoly;
