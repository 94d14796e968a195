//! Bayesian credible sets for partially identified moment-inequality models.
//!
//! Geometry and model code is generic over [`Scalar`] (`f32` or `f64`); random
//! sampling and the experiment harness work in `f64`. The aliases below fix the
//! common double-precision instantiations.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod credible;
pub mod dpposterior;
pub mod error;
pub mod fcs;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod samplekit;
pub mod scalar;
pub mod setgeom;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Matrix = linalg::Matrix<f64>;
pub type Direction = setgeom::Direction<f64>;
pub type Interval = setgeom::IntervalSet<f64>;
pub type SphereGrid = setgeom::SphereGrid<f64>;
pub type ThetaBox = models::ThetaBox<f64>;
pub type SupportSolveResult = setgeom::SupportSolveResult<f64>;
pub type CredibleBand = credible::CredibleBand;

pub type Matrix32 = linalg::Matrix<f32>;
pub type Direction32 = setgeom::Direction<f32>;
pub type Interval32 = setgeom::IntervalSet<f32>;
pub type ThetaBox32 = models::ThetaBox<f32>;
