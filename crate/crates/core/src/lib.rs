//! Markov additive models of wireless channel capacity.
//!
//! The analytic modules are generic over a [`Real`] scalar (`f32` or `f64`);
//! the aliases at the bottom fix it to `f64`. Simulation is `f64` only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod control;
pub mod copula;
pub mod error;
pub mod markov;
pub mod model;
pub mod numeric;
pub mod order;
pub mod scalar;
pub mod sim;
pub mod spectral;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

pub type CopulaSpec = copula::CopulaSpec<f64>;
pub type GridCopula = copula::GridCopula<f64>;
pub type IncrementLaw = channel::IncrementLaw<f64>;
pub type SnrMatrix = channel::SnrMatrix<f64>;
pub type OrderedStateSpace = markov::OrderedStateSpace<f64>;
pub type MarginalDistribution = markov::MarginalDistribution<f64>;
pub type TransitionMatrix = markov::TransitionMatrix<f64>;
pub type MarkovAdditiveModel = model::MarkovAdditiveModel<f64>;
pub type KernelMatrix = spectral::KernelMatrix<f64>;
pub type SpectralResult = spectral::SpectralResult<f64>;
pub type TailBoundCurve = bounds::TailBoundCurve<f64>;
pub type ControlPlan = control::ControlPlan<f64>;
pub type PathEnumeration = order::PathEnumeration<f64>;
