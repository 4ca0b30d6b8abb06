// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eki;
pub mod error;
pub mod filters;
pub mod harness;
pub mod models;
pub mod report;
pub mod sloppiness;
pub mod stats;
pub mod streams;
pub mod tempersmc;
pub mod transform;

pub use error::{Error, Result};
