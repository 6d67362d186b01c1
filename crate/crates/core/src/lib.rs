//! Numerical laboratory for stochastic differential equations with rough
//! coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`fields`]: grids, coefficient fields, presets, mollification.
//! * [`maxops`]: maximal operators `M`, `M_L` and the half derivative, plus
//!   scans of the pointwise difference inequalities they control.
//! * [`law`], [`norms`]: probability laws on grids and weighted norms
//!   relative to them.
//! * [`sde`]: shared-noise Euler–Maruyama ensembles and the convergence and
//!   uniqueness functionals evaluated on coupled pairs.
//! * [`fpe`]: Fokker–Planck and kinetic solvers with their monitors.
//! * [`runner`]: scenario configs, orchestration and output files.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod fpe;
pub mod grid;
pub mod law;
pub mod maxops;
pub mod norms;
pub mod report;
pub mod runner;
pub mod sde;

pub use error::{Error, Result};
pub use fields::{mollify, preset_field, CoefficientField, Params};
pub use grid::Grid;
pub use law::Law;
pub use report::Report;
