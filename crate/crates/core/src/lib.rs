//! Numerical laboratory for the regularized Jang equation on model initial
//! data sets.
//!
//! The crate is `no_std` (with `alloc`) so that the numerical core can be
//! embedded anywhere; file formats, configuration and the command line live
//! in the companion `horizonlab` crate.
//!
//! Module map:
//!
//! * [`geometry`]: metrics, Christoffel symbols, curvature and the constraint
//!   quantities `mu`, `J` of an initial data set.
//! * [`initial_data`]: the catalog of model data sets and decay validation.
//! * [`surfaces`]: spectral sphere grids and the geometry of embedded
//!   2-surfaces (mean curvature, expansion, Fermi graphs).
//! * [`stability`]: the linearized expansion operator and its principal
//!   eigenpair.
//! * [`jang`]: the regularized Jang equation as a radial boundary value
//!   problem, Newton solves and continuation in the regularization parameter.
//! * [`blowdown`]: capillary blowdown limits, level-set residuals and
//!   graphical/cylindrical classification.
//! * [`foliation`]: constant-expansion foliations and the comparison check.
//! * [`structure`]: partition of blowup regions into maximal domains and
//!   foliation bands.
//! * [`gluing`]: warped-product cylinders and the conformal Laplacian bound.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is deliberate: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod blowdown;
pub mod error;
pub mod foliation;
pub mod geometry;
pub mod gluing;
pub mod initial_data;
pub mod jang;
pub mod linalg;
pub mod stability;
pub mod structure;
pub mod surfaces;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
