// `!(x > 0.0)` is used deliberately so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dressed;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod inference;
pub mod linalg;
pub mod liouville;
pub mod observables;
pub mod run;

pub use error::{Error, Result};
