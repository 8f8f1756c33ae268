//! Surrogate-model toolkit for centrifugal-pump performance prediction.
//!
//! The crate covers the full study pipeline: design-space construction from
//! a duty point, Latin Hypercube sampling, sensitivity screening, four
//! competing regression models (quadratic response surface, Gaussian RBF,
//! ordinary Kriging, Bayesian-regularized neural network), nearest-gap data
//! augmentation for scarce simulation data, and a comparison harness. A
//! synthetic analytic oracle stands in for the flow solver so everything
//! runs on a laptop.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases at the crate root pin the working precision used by the CLI.

pub mod augment;
pub mod dataset;
pub mod design;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod surrogate;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset64 = dataset::Dataset<f64>;
pub type NormalizationParams64 = dataset::NormalizationParams<f64>;
pub type DutyPoint64 = design::DutyPoint<f64>;
pub type DesignSpace64 = design::DesignSpace<f64>;
pub type SensitivityResult64 = design::SensitivityResult<f64>;
pub type SyntheticPumpOracle64 = oracle::SyntheticPumpOracle<f64>;
pub type RsfModel64 = surrogate::RsfModel<f64>;
pub type RbfModel64 = surrogate::RbfModel<f64>;
pub type KrgModel64 = surrogate::KrgModel<f64>;
pub type NnModel64 = nn::NnModel<f64>;
pub type TrainReport64 = nn::TrainReport<f64>;
pub type ValidationReport64 = metrics::ValidationReport<f64>;
