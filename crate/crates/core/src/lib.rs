//! Bootstrap statistics for frequency response functions (FRFs).
//!
//! An FRF sampled on a sparse, non-uniform set of frequencies is converted
//! into a real pseudo-impulse response (PIR) without loss of information.
//! Functional bootstrap bands on PIRs then give:
//!
//! * prediction bands for a new draw ([`bands::prediction_band`]),
//! * the minimal band containing a test sample and its confidence level
//!   ([`bands::minimal_prediction_band`]),
//! * an empirical CDF/PDF of a test sample's distance from the population
//!   ([`density::estimate_density`]),
//! * an unpaired two-group comparison with residual localisation in the
//!   frequency domain ([`compare::compare_unpaired`]).
//!
//! Every bootstrap routine draws its resample indices from per-replication
//! substreams ([`resampling::SeededIndices`]), so results depend only on the
//! inputs and the seed, never on the thread schedule.

pub mod bands;
pub mod compare;
pub mod density;
mod error;
pub mod grid;
pub mod io;
pub mod resampling;
pub mod signal;
mod stats;
pub mod synth;

pub use bands::{minimal_prediction_band, prediction_band, Band, MinimalBand};
pub use compare::{compare_unpaired, residual_frf, residuals, ComparisonResult};
pub use density::{estimate_density, DensityEstimate, DistanceMetric, NumeratorMode};
pub use error::{Error, Result};
pub use grid::{derive_grid, FrequencyGrid};
pub use io::{load_dataset, save_dataset, Dataset, Format};
pub use resampling::{alpha_at, c_at, ecdf, BootstrapConfig, QuantileMode, StatEcdf};
pub use signal::{frf_from_pir, pir_from_frf, pir_stats, Frf, FrfSet, Pir, PirStats};
pub use synth::{generate_synthetic, SyntheticSpec};

pub use num_complex::Complex64;
