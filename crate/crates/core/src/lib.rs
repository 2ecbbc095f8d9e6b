//! Exact Wasserstein-1 distances, diameter-bounded quantization, push-down
//! audits of resolution-indexed measure families, and weak-convergence
//! diagnostics on finite metric spaces.
//!
//! Everything is generic over [`Scalar`]: `f64` and `f32` for speed,
//! [`Rational`] when results must be exact.

pub mod config;
pub mod convergence;
pub mod error;
pub mod lipschitz;
pub mod measures;
pub mod metric;
pub mod pushdown;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};

pub type Space = metric::FiniteMetricSpace<f64>;
pub type ExactSpace = metric::FiniteMetricSpace<Rational>;
pub type Measure = measures::DiscreteMeasure<f64>;
pub type ExactMeasure = measures::DiscreteMeasure<Rational>;
pub type Located = measures::LocatedMeasure<f64>;
pub type ExactLocated = measures::LocatedMeasure<Rational>;
pub type Charge = measures::ChargeTable<f64>;
pub type ExactCharge = measures::ChargeTable<Rational>;
