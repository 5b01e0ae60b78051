//! Correlation-based connectivity density analysis for station networks.
//!
//! The crate covers the whole analysis chain for a network of monitoring
//! stations that record a scalar quantity (wind speed) on a regular grid:
//!
//! - [`ingest`]: CSV parsing onto a regular time grid, calendar windowing and
//!   missingness reporting.
//! - [`distfit`]: maximum-likelihood fits of Weibull, Gamma and GEV marginals
//!   ranked by a spacing-entropy Kullback-Leibler divergence estimate.
//! - [`corrnet`]: per-window Pearson correlation matrices, threshold rules,
//!   and the connectivity density time series.
//! - [`spectral`]: classical periodogram, correlogram estimator and the
//!   lag-correlation robust periodogram with peak extraction.
//! - [`surrogate`]: iid GEV surrogate panels and the periodicity experiment.
//! - [`pipeline`]: the density → periodogram → peak chain shared by the
//!   real-data and surrogate runs.
//! - [`synthetic`]: a seeded synthetic corpus with a shared annual cycle.

pub mod corrnet;
pub mod distfit;
pub mod ingest;
pub mod pipeline;
pub mod spectral;
pub mod surrogate;
pub mod synthetic;

mod optim;

pub use corrnet::{CorrelationGraph, CorrelationMatrix, DensitySeries, ThresholdRule};
pub use distfit::{Distribution, DistributionFamily, FitResult, KldScore};
pub use ingest::{MissingnessReport, StationSeries, WindowSpec, WindowedPanel};
pub use spectral::{CorrelationMethod, Estimator, PeakReport, Periodogram, SignalModel};
pub use surrogate::{SurrogateOutcome, SurrogateSpec};
