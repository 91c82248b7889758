//! Simulation and reconstruction of space-dependent SU(2) polarization
//! processes from near- and far-field projective intensities.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for common use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod forward;
pub mod fourier;
pub mod grid;
pub mod metrics;
pub mod ml;
pub mod reconstruct;
pub mod retrieval;
pub mod scalar;
pub mod su2;

pub use error::{Error, Result};
pub use forward::{MapKey, NoiseModel, NoiseSpec, PlateSpec, Protocol, ThetaProfile};
pub use grid::{BeamEnvelope, Grid, GridSpec, OpticalSetup, Plane};
pub use metrics::{abs_distance, fidelity_map, mean_fidelity, similarity, FidelitySummary};
pub use ml::{ml_cost, ml_cost_unitary, ml_fit_field, MlConfig, MlReport, Seeding};
pub use reconstruct::{fqpt_pipeline, FqptConfig, FqptDiagnostics, XiGrid, XiOptions};
pub use retrieval::GsSchedule;
pub use scalar::Real;
pub use su2::{Polarization, Su2Params, Unitary2};

pub type Su2Field64 = forward::Su2Field<f64>;
pub type Su2Field32 = forward::Su2Field<f32>;
pub type MeasurementSet64 = forward::MeasurementSet<f64>;
pub type MeasurementSet32 = forward::MeasurementSet<f32>;
pub type IntensityMap64 = forward::IntensityMap<f64>;
pub type IntensityMap32 = forward::IntensityMap<f32>;
pub type PowerSpectrum64 = forward::PowerSpectrum<f64>;
pub type FqptOutput64 = reconstruct::FqptOutput<f64>;
pub type MlOutput64 = ml::MlOutput<f64>;
pub type Unitary64 = Unitary2<f64>;
pub type Unitary32 = Unitary2<f32>;
