// Tolerance checks are written `!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod measure;
pub mod modelspace;
pub mod operators;
pub mod parfenov;
pub mod poly;
pub mod quadrature;
pub mod schatten;

pub use error::{Error, Result};
