//! Density → periodogram → peak chain shared by real and surrogate runs.

use chrono::TimeDelta;
use thiserror::Error;

use crate::corrnet::{self, CorrError, DensitySeries, ThresholdRule, DEFAULT_MIN_OVERLAP};
use crate::distfit::FitError;
use crate::ingest::{self, IngestError, StationSeries, WindowSpec};
use crate::spectral::{
    self, classical_periodogram, fill_gaps, peak_period, robust_periodogram, CorrelationMethod, PeakReport,
    Periodogram, SpectralError,
};

/// Period band, in days, searched for the annual peak.
pub const ANNUAL_BAND: (f64, f64) = (300.0, 430.0);
/// Longest run of missing density slots bridged by interpolation.
pub const MAX_GAP_WINDOWS: usize = 7;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Corr(#[from] CorrError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("density series for {rule}: {source}")]
    Density { rule: ThresholdRule, source: SpectralError },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub min_overlap: usize,
    /// `None` selects ⌊N/3⌋ for each series.
    pub max_lag: Option<usize>,
    pub method: CorrelationMethod,
    pub annual_band: (f64, f64),
    pub max_gap: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            min_overlap: DEFAULT_MIN_OVERLAP,
            max_lag: None,
            method: CorrelationMethod::SpearmanRank,
            annual_band: ANNUAL_BAND,
            max_gap: MAX_GAP_WINDOWS,
        }
    }
}

/// Spectral summary of one rule's density series.
#[derive(Debug, Clone, PartialEq)]
pub struct RulePeriodicity {
    pub rule: ThresholdRule,
    pub density: DensitySeries,
    pub robust: Periodogram,
    pub classical: Periodogram,
    pub robust_peak: PeakReport,
    pub classical_peak: PeakReport,
    /// Robust power at the strongest bin inside the annual band.
    pub annual_power: f64,
    /// `annual_power` divided by the median robust power.
    pub annual_peak_ratio: f64,
}

impl RulePeriodicity {
    pub fn mean_density(&self) -> Option<f64> {
        self.density.mean()
    }
}

/// Spectral analysis of one density series sampled every `interval`.
pub fn analyse_density(
    density: DensitySeries,
    interval: TimeDelta,
    options: &PipelineOptions,
) -> Result<RulePeriodicity, PipelineError> {
    let rule = density.rule;
    let y = fill_gaps(&density.densities, options.max_gap)
        .map_err(|source| PipelineError::Density { rule, source })?;
    let max_lag = options.max_lag.unwrap_or_else(|| spectral::default_max_lag(y.len()));
    let robust = robust_periodogram(&y, max_lag, options.method)
        .map_err(|source| PipelineError::Density { rule, source })?
        .with_sample_interval(interval);
    let classical = classical_periodogram(&y)?.with_sample_interval(interval);
    let robust_peak = peak_period(&robust, None)?;
    let classical_peak = peak_period(&classical, None)?;
    let annual = peak_period(&robust, Some(options.annual_band))?;
    let annual_peak_ratio = spectral::peak_ratio(&robust, options.annual_band)?;
    Ok(RulePeriodicity {
        rule,
        density,
        robust,
        classical,
        robust_peak,
        classical_peak,
        annual_power: annual.peak_power,
        annual_peak_ratio,
    })
}

/// Windows the corpus, builds density series for every rule and analyses each.
pub fn analyse_corpus(
    series: &[StationSeries],
    window: &WindowSpec,
    rules: &[ThresholdRule],
    options: &PipelineOptions,
) -> Result<Vec<RulePeriodicity>, PipelineError> {
    let panels = ingest::window_panel(series, window)?;
    let densities = corrnet::density_series_multi(&panels, rules, options.min_overlap)?;
    densities
        .into_iter()
        .map(|d| analyse_density(d, window.length, options))
        .collect()
}
