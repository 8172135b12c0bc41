//! Computational checks of the transference argument for diagonal quadratic
//! equations `c_1 x_1^2 + ... + c_s x_s^2 = 0` restricted to dense sets.
//!
//! The modules follow the pipeline: exact arithmetic ([`arith`]), majorants
//! and the W-trick ([`majorant`]), Fourier transforms and arc estimates
//! ([`expsum`]), weighted solution counts ([`counting`]), moments and
//! restriction diagnostics ([`moments`]) and colouring search plus the
//! end-to-end statistic ([`regularity`]). [`cli`] drives all of it.

pub mod arith;
pub mod cli;
pub mod counting;
pub mod error;
pub mod expsum;
pub mod func;
pub mod majorant;
pub mod moments;
pub mod regularity;

pub use error::{Error, Result};
