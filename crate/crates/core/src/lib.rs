//! Data-assimilation engine for an extended SEIR epidemic model.
//!
//! An ensemble transform Kalman filter fuses the model with daily
//! hospitalized / recovered / deceased counts, estimating the hidden
//! compartments and the time-varying effective reproduction number with
//! uncertainty bands. The building blocks:
//!
//! - [`model`]: the compartment dynamics, reproduction-number formulas, and
//!   the observation-derived removal-rate series;
//! - [`integrator`]: fixed-step integration and the log-transformed
//!   assimilation state;
//! - [`etkf`]: the generic ensemble transform Kalman filter with inflation;
//! - [`assimilator`]: the daily forecast-analysis cycle;
//! - [`io`]: observation CSVs, run configs, and analysis output;
//! - [`diagnostics`]: twin experiments, the reference reproduction-number
//!   estimate, and sensitivity sweeps.
//!
//! All numerics are generic over the scalar type through [`scalar::Float`];
//! the `*64` aliases below fix `f64` for ordinary use.

pub mod assimilator;
pub mod diagnostics;
pub mod error;
pub mod etkf;
pub mod integrator;
pub mod io;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Float;

/// `f64` compartment state.
pub type Compartments64 = model::Compartments<f64>;
/// `f64` medical parameter set.
pub type MedicalParams64 = model::MedicalParams<f64>;
/// `f64` dated parameter schedule.
pub type ParamSchedule64 = model::ParamSchedule<f64>;
/// `f64` log-scale assimilation state.
pub type LogState64 = integrator::LogState<f64>;
/// `f64` ensemble.
pub type Ensemble64 = etkf::Ensemble<f64>;
/// `f64` run configuration.
pub type RunConfig64 = assimilator::RunConfig<f64>;
/// `f64` per-day analysis record.
pub type AnalysisRecord64 = assimilator::AnalysisRecord<f64>;
/// `f64` observation series.
pub type ObservationSeries64 = io::ObservationSeries<f64>;
/// `f64` twin ground truth.
pub type TwinSpec64 = diagnostics::TwinSpec<f64>;
/// `f64` twin file description.
pub type TwinConfig64 = diagnostics::TwinConfig<f64>;
