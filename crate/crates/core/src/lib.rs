// NaN must fail validation, hence `!(x >= lo)` style checks throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod bound_formulas;
pub mod error;
pub mod frac_quad;
pub mod harness;
pub mod inequality_engine;
pub mod lip_corpus;

pub use error::{Error, Result};
