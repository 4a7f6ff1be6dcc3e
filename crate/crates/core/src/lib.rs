//! Kinetic Langevin sampling by splitting the potential
//! `U(x) = ½ xᵀKx + G(x)` (diagonal `K`) into an exactly integrated harmonic
//! Langevin part and gradient kicks by `∇G`.
//!
//! * [`potential`]: target models and step-size validity checks.
//! * [`harmonic`]: exact harmonic coefficients and their oracles.
//! * [`samplers`]: the `𝒫𝒢`, `𝒫𝒢𝒫` and OBABO chains.
//! * [`coupling`]: twisted metric, contraction constants, coupled runs.
//! * [`metrics`]: moments, empirical `W₂`, reference moments, bias sweeps.
//!
//! Numerical code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix it to `f64`.

pub mod coupling;
pub mod error;
pub mod harmonic;
pub mod linalg;
pub mod metrics;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model = potential::PotentialModel<f64>;
pub type State = potential::PhaseState<f64>;
pub type Coeffs = harmonic::HarmonicCoeffs<f64>;
pub type Noise = harmonic::NoiseDraw<f64>;
pub type Config = samplers::SchemeConfig<f64>;
pub type Chain = samplers::ChainOutput<f64>;
pub type Metric = coupling::TwistedMetric<f64>;
pub type Mat = linalg::Mat2<f64>;

pub type Model32 = potential::PotentialModel<f32>;
pub type State32 = potential::PhaseState<f32>;
pub type Config32 = samplers::SchemeConfig<f32>;
