//! Numerical study of the resting-cell leukemia delay equation
//!
//! ```text
//! x'(t) = -[β(x(t)) + δ] x(t) + k β(x(t-r)) x(t-r),    β(x) = β₀ / (1 + xⁿ)
//! ```
//!
//! The crate covers the equilibria of the model, the spectrum of its
//! linearization around the nontrivial equilibrium (leading eigenvalues and
//! the Hopf curve), an adaptive method-of-steps integrator with dense output,
//! trajectory classification (focus / limit cycle) with a basin-threshold
//! search along an eigenmode family of initial histories, and the planar
//! generalized Hopf (Bautin) normal form used as a qualitative reference.
//!
//! All numerical code is generic over the [`Scalar`] trait (implemented for
//! `f32` and `f64`). The aliases at the crate root fix the scalar to `f64`,
//! which is what the experiments use.

// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cycles;
pub mod error;
pub mod integrator;
pub mod model;
pub mod normalform;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Model parameters in double precision.
pub type Params = model::ModelParams<f64>;
/// Leading eigenvalue in double precision.
pub type Eigen = spectrum::Eigenvalue<f64>;
/// Hopf point in double precision.
pub type Hopf = spectrum::HopfPoint<f64>;
/// Trajectory of the leukemia model in double precision.
pub type ModelTrajectory = integrator::Trajectory<f64, model::ModelParams<f64>>;
/// Initial history in double precision.
pub type History = integrator::HistoryFunction<f64>;
/// Integration options in double precision.
pub type Options = integrator::IntegrationOptions<f64>;

/// Classification settings in double precision.
pub type Settings = cycles::ClassifySettings<f64>;
/// Normal-form unfolding parameters in double precision.
pub type Unfolding = normalform::NormalFormParams<f64>;
