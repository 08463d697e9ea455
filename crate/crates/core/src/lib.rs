//! Peak-norm optimal feedback synthesis for LTI systems with actuator limits.
//!
//! The crate computes the star-norm (an invariant-ellipsoid bound on the
//! L∞-to-L∞ gain) of a linear system, synthesizes low-gain and saturating
//! high-gain state-feedback laws that minimize it, designs an observer for
//! output feedback, and validates everything by saturated closed-loop
//! simulation of a single-area frequency-regulation model.
//!
//! All numerical code is generic over [`Real`]; `f64` aliases are provided at
//! the crate root.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::assign_op_pattern)]

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod model;
pub mod scalar;
pub mod sdp;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type SymMatrix = linalg::SymMatrix<f64>;
pub type FrequencyParams = model::FrequencyParams<f64>;
pub type PlantModel = model::PlantModel<f64>;
pub type LmiExpr = lmi::LmiExpr<f64>;
pub type SdpProblem = sdp::SdpProblem<f64>;
pub type SdpSolution = sdp::SdpSolution<f64>;
pub type SolverOptions = sdp::SolverOptions<f64>;
pub type StarNormCertificate = synthesis::StarNormCertificate<f64>;
pub type ControllerDesign = synthesis::ControllerDesign<f64>;
pub type ObserverDesign = synthesis::ObserverDesign<f64>;
pub type SearchSpec = synthesis::SearchSpec<f64>;
pub type BaselineSpec = baselines::BaselineSpec<f64>;
pub type SimResult = sim::SimResult<f64>;
pub type DisturbanceProfile = sim::DisturbanceProfile<f64>;
