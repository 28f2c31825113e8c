//! Calibration toolkit for the sufficiency factor model with time-varying
//! price-dividend ratio.
//!
//! The pipeline is:
//!
//! 1. [`dataset`]: parse the annual macro-finance table and derive growth
//!    rates and gross returns.
//! 2. [`moments`]: estimate the lognormal moments of consumption growth, the
//!    price-dividend growth factor and the equity return.
//! 3. [`model`]: evaluate the three calibration equations as residuals.
//! 4. [`solver`]: recover the coefficient of relative risk aversion and the
//!    two sufficiency factors at a fixed discount factor.
//! 5. [`classify`]: compare certain and uncertain CRRA utility and label the
//!    investor's risk attitude.
//!
//! [`simulate`] generates synthetic jointly lognormal economies used to check
//! the closed-form lognormal identities and the estimators.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below are what the command-line tool uses.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod dataset;
pub mod jsonfmt;
pub mod model;
pub mod moments;
pub mod scalar;
pub mod simulate;
pub mod solver;

mod error;

pub use error::Error;
pub use scalar::Scalar;

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type MacroDataset64 = dataset::MacroDataset<f64>;
pub type DerivedSeries64 = dataset::DerivedSeries<f64>;
pub type LogMoments64 = moments::LogMoments<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type CalibrationResult64 = solver::CalibrationResult<f64>;
pub type UtilityComparison64 = classify::UtilityComparison<f64>;
pub type EconomySpec64 = simulate::EconomySpec<f64>;

pub type MacroDataset32 = dataset::MacroDataset<f32>;
pub type DerivedSeries32 = dataset::DerivedSeries<f32>;
pub type LogMoments32 = moments::LogMoments<f32>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
pub type CalibrationResult32 = solver::CalibrationResult<f32>;
pub type UtilityComparison32 = classify::UtilityComparison<f32>;
pub type EconomySpec32 = simulate::EconomySpec<f32>;
