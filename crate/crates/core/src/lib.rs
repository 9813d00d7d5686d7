//! Open-system dynamics in non-Markovian two-mode squeezed baths.
//!
//! Every numeric type is generic over a [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod operator;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use bath::{critical_r, squeeze_factors, CriticalR};
pub use dynamics::{evolve, evolve_lindblad, evolve_unitary, fidelity_series, max_fidelity};
pub use models::{build_adiabatic_model, build_xy_chain_model, embed_site_operator, LindbladKind};

pub type Operator = operator::Operator<f64>;
pub type StateVector = operator::StateVector<f64>;
pub type DensityMatrix = operator::DensityMatrix<f64>;
pub type SqueezedBathSpec = bath::SqueezedBathSpec<f64>;
pub type SqueezeFactors = bath::SqueezeFactors<f64>;
pub type ModelInstance = models::ModelInstance<f64>;
pub type EvolutionState = dynamics::EvolutionState<f64>;
pub type IntegratorConfig = dynamics::IntegratorConfig<f64>;
pub type TrajectoryRecord = dynamics::TrajectoryRecord<f64>;

/// Complex double used for operator entries.
pub type C64 = num_complex::Complex64;
