//! Weighted Boltzmann sampling of context-free languages with control over
//! both the size and the letter composition of the generated words.
//!
//! The pipeline: parse a [`grammar`], evaluate its generating function with
//! the numerical [`oracle`], [`tuner`] the letter weights so the expected
//! composition hits a target, then draw words with the rejection samplers
//! of [`sampler`]. [`exact`] counts words with big integers and rationals
//! and backs the statistical tests; [`tetris`] applies the whole chain to
//! tetromino tessellations of a fixed-width well.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod exact;
pub mod grammar;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod tetris;
pub mod tuner;

pub(crate) mod expr_eval;
pub(crate) mod linalg;

pub use scalar::Scalar;

/// Letter weights in double precision.
pub type Weights = oracle::WeightVector<f64>;
/// Letter weights in single precision.
pub type Weights32 = oracle::WeightVector<f32>;
/// Evaluation point `(z, w)` in double precision.
pub type Point = oracle::EvalPoint<f64>;
/// Evaluation point `(z, w)` in single precision.
pub type Point32 = oracle::EvalPoint<f32>;
/// Target letter frequencies in double precision.
pub type Target = tuner::TargetComposition<f64>;
/// Boltzmann expectations in double precision.
pub type Expectations = oracle::ExpectationVector<f64>;
/// Tuning outcome in double precision.
pub type Tuning = tuner::TuningResult<f64>;
/// Singularity estimate in double precision.
pub type Singularity = oracle::SingularityEstimate<f64>;
