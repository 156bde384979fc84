//! Rational-function calculus and numerical checks for Marty-type quotients,
//! modified Nevanlinna functions and Blaschke-product estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blaschke;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod logderiv;
pub mod marty;
pub mod nevanlinna;
pub mod poly;
pub mod quadrature;

pub use error::{Error, Result};
