//! High-gain adaptive output feedback on time scales.
//!
//! A linear time-invariant plant `x' = Ax + Bu, y = Cx` is driven by the
//! proportional law `u = -k y` while the gain `k` adapts through
//! `k^Δ = ‖y‖²`. The time domain may mix dense (continuous) stretches with
//! scattered points of positive graininess `μ`; on scattered points the
//! plant is advanced with its exact sample-and-hold discretization
//! `Â = expc(μA)A`, `B̂ = expc(μA)B`.
//!
//! Modules:
//! - [`timescale`]: time points, programs, realized grids, delta integrals
//!   and the generalized exponential.
//! - [`matfun`]: matrix exponential, `expc`, spectra, Lyapunov solves and
//!   transmission zeros.
//! - [`plant`]: the truth model and its propagation.
//! - [`controller`]: gain updates, graininess policies, wiggle sequences and
//!   the blocking schedule.
//! - [`analysis`]: stability and assumption audits.
//! - [`cli`]: scenario configuration, the closed-loop driver, trace I/O and
//!   the `simulate | check | analyze` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod controller;
mod error;
pub mod matfun;
pub mod plant;
pub mod timescale;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
pub use nalgebra::Complex;
/// Double precision complex scalar.
pub type C64 = Complex<f64>;
