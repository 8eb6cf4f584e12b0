//! Bounds on low-lying zeros of families of cuspidal newforms.
//!
//! The crate computes the centered-moment limits of one-test-function
//! statistics, turns them into an interval guaranteed to contain a zero and
//! into upper bounds on the fraction of forms with many zeros near the
//! central point, and cross-checks the moment formulas against Haar-random
//! special orthogonal matrices.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod moments;
pub mod quad;
pub mod rmt;
pub mod selftest;
pub mod testfun;

pub use error::{Error, Result};
