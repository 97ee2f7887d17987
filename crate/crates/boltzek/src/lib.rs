//! Small spectrum of the semiclassical linear Boltzmann operator `P_h = X_0 + Q_h`
//! on confining Morse landscapes, with Eyring-Kramers predictions, quasimodes and
//! semigroup experiments.
//!
//! The landscape and prefactor code is generic over [`Real`] (`f32` or `f64`);
//! the discretized operator, eigensolver and time stepping run in `f64`.

pub mod banded;
pub mod collision;
pub mod discretization;
pub mod ekformula;
pub mod error;
pub mod landscape;
pub mod potential;
pub mod quadrature;
pub mod quasimode;
pub mod saddledyn;
pub mod scalar;
pub mod semigroup;
pub mod sparse;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Poly1D = potential::Poly1<f64>;
pub type Poly2D = potential::Poly2<f64>;
pub type CriticalPoint64 = landscape::CriticalPoint<f64>;
pub type Labeling64 = landscape::Labeling<f64>;
pub type RateFunction64 = collision::RateFunction<f64>;
pub type CollisionModel64 = collision::CollisionModel<f64>;
pub type SaddleData64 = saddledyn::SaddleData<f64>;
pub type SaddlePrefactor64 = saddledyn::SaddlePrefactor<f64>;
pub type EKPrediction64 = ekformula::EKPrediction<f64>;

pub type Poly1F32 = potential::Poly1<f32>;
pub type SaddleData32 = saddledyn::SaddleData<f32>;
