//! Expected utility maximization over stochastic combinatorial problems.
//!
//! A utility function `mu` on `[0, inf)` is approximated by a short exponential
//! sum `sum_k c_k psi_k^x` with `|psi_k| <= 1`. Because element weights are
//! independent, `E[psi^w(S)]` factors into per-element moments, and the
//! resulting multi-criteria problem is solved by scaling and rounding the
//! log-moduli and arguments of those moments into integer configurations that
//! a pseudopolynomial dynamic program can enumerate.
//!
//! Module map:
//! - [`distributions`]: element weight laws and their complex moments.
//! - [`fourier`]: truncated Fourier series in one and two dimensions.
//! - [`esum`]: utility functions and their certified exponential-sum decomposition.
//! - [`config`]: rounding, reachable-configuration enumeration and scoring.
//! - [`problems`]: shortest path, knapsack variants, spanning tree, multi-utility.
//! - [`oracle`]: exhaustive ground truth by exact convolution or Monte Carlo.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod distributions;
pub mod error;
pub mod esum;
pub mod fourier;
pub mod oracle;
pub mod problems;

pub use error::{Error, Result};
pub use num_complex::Complex64;
