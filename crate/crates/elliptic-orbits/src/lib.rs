//! Elliptic-function machinery for orbit problems: Weierstrass ℘, ζ, σ from
//! quartic invariants, well-time uniformisation, KLMN and two-centre orbits,
//! semi-classical spirals and Feynman–Kac diffusions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod ode;
pub mod orbits;
pub mod poly;
pub mod quad;
pub mod quartic_lab;
pub mod spirals;
pub mod stochastic;
pub mod uniformisation;

pub use error::{Error, Result};
