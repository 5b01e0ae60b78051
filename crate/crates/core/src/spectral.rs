//! Periodogram estimators and peak extraction.
//!
//! All estimators are evaluated on the grid ω_l = 2πl/N, l = 0..⌊(N−1)/2⌋,
//! after removing the sample mean:
//!
//! - [`classical_periodogram`]: I(ω) = (1/N)|Σ yₙ e^{−iωn}|², via FFT.
//! - [`correlogram_spectrum`]: S(ω) = Σ_{|k|<N} r̂(k) e^{−iωk} from the biased
//!   autocovariance; numerically identical to the classical periodogram.
//! - [`robust_periodogram`]: S̃(ω) = 2ℜ(Σ_{k=0..L} ρ̃(k) e^{iωk}) − ρ̃(0),
//!   with ρ̃(k) the Pearson or Spearman correlation of the lag-k overlap.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chrono::TimeDelta;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

pub const MIN_LENGTH: usize = 4;
/// Mean tropical year, the annual reference period.
pub const YEAR_DAYS: f64 = 365.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("series has {n} points, at least {min} required")]
    Size { n: usize, min: usize },

    #[error("lag {lag} out of range for series of length {n}")]
    Lag { lag: usize, n: usize },

    #[error("zero-variance overlap at lag {0}")]
    ZeroVariance(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no frequency bins with period in [{lo}, {hi}] days")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("gap of {len} missing values at index {start} exceeds the interpolation limit of {max}")]
    Gap { start: usize, len: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CorrelationMethod {
    Pearson,
    #[default]
    SpearmanRank,
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pearson => "pearson",
            Self::SpearmanRank => "spearman",
        })
    }
}

impl FromStr for CorrelationMethod {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::SpearmanRank),
            other => Err(SpectralError::Parameter(format!("unknown correlation method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Classical,
    Correlogram,
    Robust { max_lag: usize, method: CorrelationMethod },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Correlogram => "correlogram",
            Self::Robust { .. } => "robust",
        })
    }
}

/// Powers on the normalized frequency grid, with the sampling interval
/// needed to express bins as physical periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub frequencies: Vec<f64>,
    pub powers: Vec<f64>,
    pub estimator: Estimator,
    /// Length of the analysed series.
    pub n: usize,
    pub sample_interval: TimeDelta,
}

impl Periodogram {
    pub fn with_sample_interval(mut self, interval: TimeDelta) -> Self {
        self.sample_interval = interval;
        self
    }

    fn interval_days(&self) -> f64 {
        self.sample_interval.num_seconds() as f64 / 86_400.0
    }

    /// Period of bin `l` in days; infinite for l = 0.
    pub fn period_days(&self, l: usize) -> f64 {
        if l == 0 {
            f64::INFINITY
        } else {
            2.0 * PI / self.frequencies[l] * self.interval_days()
        }
    }

    /// Bin index whose period is closest to `days`.
    pub fn nearest_bin(&self, days: f64) -> usize {
        let l = (self.n as f64 * self.interval_days() / days).round() as usize;
        l.clamp(1, self.frequencies.len().saturating_sub(1).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub bin: usize,
    pub peak_frequency: f64,
    pub peak_period_days: f64,
    pub peak_power: f64,
    /// Period interval in days that was searched, if any.
    pub band: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModel {
    pub beta: f64,
    pub omega: f64,
    pub phi: f64,
    pub sigma: f64,
    pub n: usize,
}

impl SignalModel {
    pub fn validate(&self) -> Result<(), SpectralError> {
        let ok = self.beta >= 0.0
            && self.omega > 0.0
            && self.omega < PI
            && self.phi > -PI
            && self.phi <= PI
            && self.sigma >= 0.0
            && self.n > 0;
        if ok {
            Ok(())
        } else {
            Err(SpectralError::Parameter(format!("invalid signal model {self:?}")))
        }
    }
}

/// yₙ = β cos(ωn + φ) + εₙ for n = 0..N, with εₙ iid N(0, σ²).
pub fn synth_cosine(model: &SignalModel, seed: u64) -> Result<Vec<f64>, SpectralError> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((0..model.n)
        .map(|i| {
            let e = if model.sigma > 0.0 { model.sigma * noise.sample(&mut rng) } else { 0.0 };
            model.beta * (model.omega * i as f64 + model.phi).cos() + e
        })
        .collect())
}

/// ω_l = 2πl/N for l = 0..=⌊(N−1)/2⌋.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    let a = n.saturating_sub(1) / 2;
    (0..=a).map(|l| 2.0 * PI * l as f64 / n as f64).collect()
}

fn demean(y: &[f64]) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| v - mean).collect()
}

fn check_length(y: &[f64]) -> Result<(), SpectralError> {
    if y.len() < MIN_LENGTH {
        return Err(SpectralError::Size { n: y.len(), min: MIN_LENGTH });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::Parameter("series contains non-finite values".into()));
    }
    Ok(())
}

pub fn classical_periodogram(y: &[f64]) -> Result<Periodogram, SpectralError> {
    check_length(y)?;
    let n = y.len();
    let mut buf: Vec<Complex<f64>> = demean(y).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let frequencies = frequency_grid(n);
    let powers = buf[..frequencies.len()].iter().map(|c| c.norm_sqr() / n as f64).collect();
    Ok(Periodogram {
        frequencies,
        powers,
        estimator: Estimator::Classical,
        n,
        sample_interval: TimeDelta::days(1),
    })
}

/// r̂(m) = (1/N) Σ_{k<N−m} y_k y_{k+m}, on the series as given.
pub fn autocorr_biased(y: &[f64], m: usize) -> Result<f64, SpectralError> {
    let n = y.len();
    if m >= n {
        return Err(SpectralError::Lag { lag: m, n });
    }
    Ok(y[..n - m].iter().zip(&y[m..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
}

pub fn correlogram_spectrum(y: &[f64]) -> Result<Periodogram, SpectralError> {
    check_length(y)?;
    let n = y.len();
    let centered = demean(y);
    let r: Vec<f64> = (0..n)
        .map(|m| autocorr_biased(&centered, m).expect("lag < n"))
        .collect();
    let frequencies = frequency_grid(n);
    // r̂(−k) = r̂(k), so the two-sided sum folds into cosines.
    let powers = frequencies
        .par_iter()
        .map(|&w| r[0] + 2.0 * r[1..].iter().enumerate().map(|(k, rk)| rk * (w * (k + 1) as f64).cos()).sum::<f64>())
        .collect();
    Ok(Periodogram {
        frequencies,
        powers,
        estimator: Estimator::Correlogram,
        n,
        sample_interval: TimeDelta::days(1),
    })
}

/// Mid-ranks (1-based), ties share their average rank.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Mid-ranks of `y[lo..hi]` read off a precomputed ascending order of `y`.
fn ranks_in_range(y: &[f64], order: &[usize], lo: usize, hi: usize) -> Vec<f64> {
    let idx: Vec<usize> = order.iter().copied().filter(|&i| (lo..hi).contains(&i)).collect();
    let mut ranks = vec![0.0; hi - lo];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && y[idx[j + 1]] == y[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k - lo] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson_slices(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation of (y_t) with (y_{t+k}) over their overlap of length N − k,
/// using overlap means and deviations.
pub fn robust_correlation(y: &[f64], k: usize, method: CorrelationMethod) -> Result<f64, SpectralError> {
    let n = y.len();
    if k + 3 > n {
        return Err(SpectralError::Lag { lag: k, n });
    }
    let (head, tail) = (&y[..n - k], &y[k..]);
    let r = match method {
        CorrelationMethod::Pearson => pearson_slices(head, tail),
        CorrelationMethod::SpearmanRank => pearson_slices(&mid_ranks(head), &mid_ranks(tail)),
    };
    r.ok_or(SpectralError::ZeroVariance(k))
}

/// ρ̃(0..=max_lag); zero-variance lags are replaced by 0.
pub fn lag_correlations(y: &[f64], max_lag: usize, method: CorrelationMethod) -> Result<Vec<f64>, SpectralError> {
    if max_lag + 3 > y.len() {
        return Err(SpectralError::Lag { lag: max_lag, n: y.len() });
    }
    let rho: Vec<Result<f64, SpectralError>> = match method {
        CorrelationMethod::Pearson => (0..=max_lag).into_par_iter().map(|k| robust_correlation(y, k, method)).collect(),
        CorrelationMethod::SpearmanRank => {
            let mut order: Vec<usize> = (0..y.len()).collect();
            order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
            (0..=max_lag)
                .into_par_iter()
                .map(|k| {
                    let n = y.len();
                    let head = ranks_in_range(y, &order, 0, n - k);
                    let tail = ranks_in_range(y, &order, k, n);
                    pearson_slices(&head, &tail).ok_or(SpectralError::ZeroVariance(k))
                })
                .collect()
        }
    };
    let degenerate = rho.iter().filter(|r| r.is_err()).count();
    if degenerate > 0 {
        log::warn!("{degenerate} of {} lags have a zero-variance overlap; using correlation 0", max_lag + 1);
    }
    Ok(rho.into_iter().map(|r| r.unwrap_or(0.0)).collect())
}

/// Default maximum lag, ⌊N/3⌋.
pub fn default_max_lag(n: usize) -> usize {
    n / 3
}

pub fn robust_periodogram(
    y: &[f64],
    max_lag: usize,
    method: CorrelationMethod,
) -> Result<Periodogram, SpectralError> {
    check_length(y)?;
    let n = y.len();
    if max_lag < 3 || max_lag + 3 > n {
        return Err(SpectralError::Parameter(format!(
            "maximum lag {max_lag} must lie in [3, N-3] for N = {n}; the series needs at least {} points",
            max_lag.max(3) + 3
        )));
    }
    // Correlations are invariant to the mean, but keep the input convention
    // of the other estimators.
    let rho = lag_correlations(&demean(y), max_lag, method)?;
    let frequencies = frequency_grid(n);
    let powers = frequencies
        .par_iter()
        .map(|&w| {
            let re: f64 = rho.iter().enumerate().map(|(k, r)| r * (w * k as f64).cos()).sum();
            2.0 * re - rho[0]
        })
        .collect();
    Ok(Periodogram {
        frequencies,
        powers,
        estimator: Estimator::Robust { max_lag, method },
        n,
        sample_interval: TimeDelta::days(1),
    })
}

/// Maximum-power bin (l ≥ 1), restricted to periods within `band` (days)
/// when given. Ties resolve to the lower frequency.
pub fn peak_period(p: &Periodogram, band: Option<(f64, f64)>) -> Result<PeakReport, SpectralError> {
    if p.powers.len() < 2 {
        return Err(SpectralError::Size { n: p.n, min: MIN_LENGTH });
    }
    let in_band = |l: usize| match band {
        Some((lo, hi)) => {
            let period = p.period_days(l);
            period >= lo && period <= hi
        }
        None => true,
    };
    let mut best: Option<usize> = None;
    for l in 1..p.powers.len() {
        if in_band(l) && best.is_none_or(|b| p.powers[l] > p.powers[b]) {
            best = Some(l);
        }
    }
    let bin = best.ok_or_else(|| {
        let (lo, hi) = band.expect("unrestricted search has bins");
        SpectralError::EmptyBand { lo, hi }
    })?;
    Ok(PeakReport {
        bin,
        peak_frequency: p.frequencies[bin],
        peak_period_days: p.period_days(bin),
        peak_power: p.powers[bin],
        band,
    })
}

/// Median of powers over l ≥ 1.
pub fn median_power(p: &Periodogram) -> f64 {
    let mut v: Vec<f64> = p.powers[1..].to_vec();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Peak power within `band` divided by the median power. A spectrum that is
/// identically zero (constant input) has ratio 0; a non-positive median
/// otherwise gives NaN.
pub fn peak_ratio(p: &Periodogram, band: (f64, f64)) -> Result<f64, SpectralError> {
    let peak = peak_period(p, Some(band))?;
    if p.powers[1..].iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let median = median_power(p);
    Ok(if median > 0.0 { peak.peak_power / median } else { f64::NAN })
}

/// Linearly fills runs of missing values no longer than `max_run`. Runs at
/// either end are filled with the nearest present value.
pub fn fill_gaps(series: &[Option<f64>], max_run: usize) -> Result<Vec<f64>, SpectralError> {
    let present: Vec<usize> = (0..series.len()).filter(|&i| series[i].is_some()).collect();
    if present.is_empty() {
        return Err(SpectralError::Gap { start: 0, len: series.len(), max: max_run });
    }
    let mut out = vec![0.0; series.len()];
    for &i in &present {
        out[i] = series[i].expect("present");
    }
    let check = |start: usize, len: usize| {
        if len > max_run {
            Err(SpectralError::Gap { start, len, max: max_run })
        } else {
            Ok(())
        }
    };
    let first = present[0];
    check(0, first)?;
    let head = out[first];
    out[..first].fill(head);
    let last = *present.last().expect("nonempty");
    check(last + 1, series.len() - last - 1)?;
    let tail = out[last];
    out[last + 1..].fill(tail);
    for w in present.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a + 1 {
            check(a + 1, b - a - 1)?;
            for i in a + 1..b {
                let t = (i - a) as f64 / (b - a) as f64;
                out[i] = out[a] + t * (out[b] - out[a]);
            }
        }
    }
    Ok(out)
}

/// Peak ratios of white-noise series under the robust estimator, one per
/// seed, sorted ascending. The Spearman variant is distribution-free, so
/// Gaussian noise stands in for any iid null.
pub fn white_noise_null(
    n: usize,
    max_lag: usize,
    method: CorrelationMethod,
    band: (f64, f64),
    seeds: std::ops::Range<u64>,
) -> Result<Vec<f64>, SpectralError> {
    let mut ratios: Vec<f64> = seeds
        .into_par_iter()
        .map(|seed| {
            let noise = synth_cosine(&SignalModel { beta: 0.0, omega: 1.0, phi: 0.0, sigma: 1.0, n }, seed)?;
            let p = robust_periodogram(&noise, max_lag, method)?;
            peak_ratio(&p, band)
        })
        .collect::<Result<_, _>>()?;
    ratios.sort_by(f64::total_cmp);
    Ok(ratios)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(beta: f64, l: usize, n: usize) -> Vec<f64> {
        synth_cosine(
            &SignalModel { beta, omega: 2.0 * PI * l as f64 / n as f64, phi: 0.0, sigma: 0.0, n },
            0,
        )
        .unwrap()
    }

    #[test]
    fn shared_order_ranks_match_direct() {
        let mut y = noise(300, 4);
        for v in y.iter_mut().step_by(7) {
            *v = 0.25;
        }
        let fast = lag_correlations(&y, 100, CorrelationMethod::SpearmanRank).unwrap();
        for (k, r) in fast.iter().enumerate() {
            assert_eq!(*r, robust_correlation(&y, k, CorrelationMethod::SpearmanRank).unwrap(), "lag {k}");
        }
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        synth_cosine(&SignalModel { beta: 0.0, omega: 1.0, phi: 0.0, sigma: 1.0, n }, seed).unwrap()
    }

    /// DFT evaluated term by term.
    fn naive_dft_power(y: &[f64], w: f64) -> f64 {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in y.iter().enumerate() {
            re += (v - mean) * (w * i as f64).cos();
            im -= (v - mean) * (w * i as f64).sin();
        }
        (re * re + im * im) / n
    }

    #[test]
    fn noiseless_cosine_cycles() {
        let y = cosine(1.0, 10, 256);
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((max - 1.0).abs() < 1e-15);
        // exactly 10 cycles: the series repeats with period 25.6 samples
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert!((synth_cosine(&SignalModel { beta: 1.0, omega: 2.0 * PI * 10.0 / 256.0, phi: 0.0, sigma: 0.0, n: 257 }, 0).unwrap()[256] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synth_determinism_and_noise_variance() {
        let a = noise(5000, 7);
        assert_eq!(a, noise(5000, 7));
        let var = a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64;
        assert!((var - 1.0).abs() < 0.06, "{var}");
        assert!(synth_cosine(&SignalModel { beta: 1.0, omega: 4.0, phi: 0.0, sigma: 0.0, n: 4 }, 0).is_err());
    }

    #[test]
    fn grid_cosine_power() {
        let p = classical_periodogram(&cosine(2.0, 10, 256)).unwrap();
        assert!((p.powers[10] - 256.0).abs() < 1e-9);
        for (l, v) in p.powers.iter().enumerate() {
            if l != 10 {
                assert!(v.abs() < 1e-9, "bin {l}: {v}");
            }
        }
        assert_eq!(p.frequencies.len(), 128);
    }

    #[test]
    fn classical_matches_direct_dft() {
        let y = noise(101, 3);
        let p = classical_periodogram(&y).unwrap();
        for (w, v) in p.frequencies.iter().zip(&p.powers) {
            assert!((naive_dft_power(&y, *w) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_series_has_no_power() {
        let p = classical_periodogram(&[3.0; 16]).unwrap();
        assert!(p.powers.iter().all(|v| v.abs() < 1e-20));
        assert!(classical_periodogram(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn white_noise_is_flat() {
        let mut flat = 0;
        for seed in 0..100 {
            let p = classical_periodogram(&noise(1024, seed)).unwrap();
            let mut sorted = p.powers[1..].to_vec();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            if sorted.last().unwrap() / median < 10.0 {
                flat += 1;
            }
        }
        assert!(flat > 50, "{flat}");
    }

    #[test]
    fn autocorr_examples() {
        let y = [1.0, 2.0, 3.0];
        assert!((autocorr_biased(&y, 0).unwrap() - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(autocorr_biased(&[1.0; 4], 1).unwrap(), 0.75);
        assert!(autocorr_biased(&y, 3).is_err());
        let y = noise(50, 4);
        for m in 0..50 {
            let mut acc = 0.0;
            for k in 0..50 {
                for j in 0..50 {
                    if j == k + m {
                        acc += y[k] * y[j];
                    }
                }
            }
            assert!((autocorr_biased(&y, m).unwrap() - acc / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn correlogram_equivalence_small() {
        for n in [4usize, 5, 64] {
            let y = noise(n, n as u64);
            let a = classical_periodogram(&y).unwrap();
            let b = correlogram_spectrum(&y).unwrap();
            let tol = if n == 4 { 1e-12 } else { 1e-9 };
            for (x, z) in a.powers.iter().zip(&b.powers) {
                assert!((x - z).abs() < tol);
            }
        }
        let c = correlogram_spectrum(&cosine(1.0, 7, 64)).unwrap();
        assert_eq!(peak_period(&c, None).unwrap().bin, 7);
    }

    #[test]
    fn parseval() {
        for n in [255usize, 256] {
            let y = noise(n, 11);
            let p = classical_periodogram(&y).unwrap();
            let mut two_sided = p.powers[0] + 2.0 * p.powers[1..].iter().sum::<f64>();
            if n % 2 == 0 {
                two_sided += naive_dft_power(&y, PI);
            }
            let c = demean(&y);
            let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((two_sided / n as f64 - var).abs() < 1e-6);
        }
    }

    #[test]
    fn shift_invariance() {
        let y = noise(128, 12);
        let shifted: Vec<f64> = y.iter().map(|v| v + 42.0).collect();
        let pairs = [
            (classical_periodogram(&y).unwrap(), classical_periodogram(&shifted).unwrap()),
            (correlogram_spectrum(&y).unwrap(), correlogram_spectrum(&shifted).unwrap()),
            (
                robust_periodogram(&y, 40, CorrelationMethod::Pearson).unwrap(),
                robust_periodogram(&shifted, 40, CorrelationMethod::Pearson).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            for (x, z) in a.powers.iter().zip(&b.powers) {
                assert!((x - z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lag_correlation_examples() {
        let y = noise(40, 13);
        for m in [CorrelationMethod::Pearson, CorrelationMethod::SpearmanRank] {
            assert!((robust_correlation(&y, 0, m).unwrap() - 1.0).abs() < 1e-15);
        }
        let square: Vec<f64> = (0..40).map(|i| if i % 4 < 2 { 1.0 } else { -1.0 }).collect();
        for m in [CorrelationMethod::Pearson, CorrelationMethod::SpearmanRank] {
            assert!((robust_correlation(&square, 2, m).unwrap() + 1.0).abs() < 1e-15);
        }
        assert!(matches!(
            robust_correlation(&[1.0; 10], 1, CorrelationMethod::Pearson),
            Err(SpectralError::ZeroVariance(1))
        ));
        assert!(robust_correlation(&y, 38, CorrelationMethod::Pearson).is_err());
        assert!(robust_correlation(&y, 37, CorrelationMethod::Pearson).is_ok());
    }

    #[test]
    fn reversed_roles_symmetry() {
        let y = noise(100, 14);
        let rev: Vec<f64> = y.iter().rev().copied().collect();
        for k in 0..20 {
            let a = robust_correlation(&y, k, CorrelationMethod::Pearson).unwrap();
            let b = robust_correlation(&rev, k, CorrelationMethod::Pearson).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_resists_single_outlier() {
        let n = 200;
        let y = synth_cosine(&SignalModel { beta: 1.0, omega: 2.0 * PI / 40.0, phi: 0.0, sigma: 0.3, n }, 15).unwrap();
        let mut spiked = y.clone();
        spiked[100] = 1e6;
        let ranks_before = mid_ranks(&y);
        let ranks_after = mid_ranks(&spiked);
        for k in [1usize, 5, 20] {
            let m = n - k;
            // rank displacement of the altered point within each overlap
            let disp = |r: &[f64], s: &[f64]| {
                r.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max)
            };
            let d = disp(&mid_ranks(&y[..m]), &mid_ranks(&spiked[..m]))
                .max(disp(&mid_ranks(&y[k..]), &mid_ranks(&spiked[k..])));
            let s0 = robust_correlation(&y, k, CorrelationMethod::SpearmanRank).unwrap();
            let s1 = robust_correlation(&spiked, k, CorrelationMethod::SpearmanRank).unwrap();
            assert!((s0 - s1).abs() < 2.0 * d / m as f64, "lag {k}: {} vs bound {}", (s0 - s1).abs(), 2.0 * d / m as f64);
            let p0 = robust_correlation(&y, k, CorrelationMethod::Pearson).unwrap();
            let p1 = robust_correlation(&spiked, k, CorrelationMethod::Pearson).unwrap();
            assert!((p0 - p1).abs() > 0.3, "lag {k}: pearson {p0} -> {p1}");
        }
        assert!(ranks_before != ranks_after);
    }

    #[test]
    fn robust_peak_on_grid_cosine() {
        let n = 365;
        let p = robust_periodogram(&cosine(1.0, 12, n), 120, CorrelationMethod::SpearmanRank).unwrap();
        assert_eq!(peak_period(&p, None).unwrap().bin, 12);
        let p = robust_periodogram(&cosine(1.0, 12, n), 120, CorrelationMethod::Pearson).unwrap();
        assert_eq!(peak_period(&p, None).unwrap().bin, 12);
    }

    #[test]
    fn robust_lag_bounds() {
        let y = noise(20, 16);
        assert!(robust_periodogram(&y, 2, CorrelationMethod::Pearson).is_err());
        assert!(robust_periodogram(&y, 18, CorrelationMethod::Pearson).is_err());
        assert!(robust_periodogram(&y, 17, CorrelationMethod::Pearson).is_ok());
    }

    #[test]
    fn amplitude_monotonicity() {
        let n = 365;
        let omega = 2.0 * PI * 20.0 / n as f64;
        for seed in 0..10 {
            let mut last = f64::NEG_INFINITY;
            for beta in [0.5, 1.0, 2.0] {
                let y = synth_cosine(&SignalModel { beta, omega, phi: 0.3, sigma: 1.0, n }, seed).unwrap();
                let p = robust_periodogram(&y, default_max_lag(n), CorrelationMethod::SpearmanRank).unwrap();
                let peak = peak_period(&p, None).unwrap().peak_power;
                assert!(peak >= last, "seed {seed} beta {beta}");
                last = peak;
            }
        }
    }

    #[test]
    fn peak_selection_rules() {
        let flat = Periodogram {
            frequencies: frequency_grid(21),
            powers: vec![1.0; 11],
            estimator: Estimator::Classical,
            n: 21,
            sample_interval: TimeDelta::days(1),
        };
        assert_eq!(peak_period(&flat, None).unwrap().bin, 1);

        // daily series, global peak at 7 days, weaker bump near a year
        let n = 1826;
        let mut powers = vec![0.0; frequency_grid(n).len()];
        let weekly = (n as f64 / 7.0).round() as usize;
        powers[weekly] = 100.0;
        powers[5] = 3.0;
        powers[6] = 2.0;
        let p = Periodogram {
            frequencies: frequency_grid(n),
            powers,
            estimator: Estimator::Classical,
            n,
            sample_interval: TimeDelta::days(1),
        };
        assert_eq!(peak_period(&p, None).unwrap().bin, weekly);
        let banded = peak_period(&p, Some((300.0, 400.0))).unwrap();
        assert_eq!(banded.bin, 5);
        assert!((banded.peak_period_days - 365.2).abs() < 1e-9);
        assert!(matches!(
            peak_period(&p, Some((100.0, 101.0))),
            Err(SpectralError::EmptyBand { .. })
        ));
    }

    #[test]
    fn annual_sinusoid_peak() {
        let n = 1826;
        let y = synth_cosine(&SignalModel { beta: 1.0, omega: 2.0 * PI / YEAR_DAYS, phi: 0.0, sigma: 0.5, n }, 17).unwrap();
        let p = robust_periodogram(&y, default_max_lag(n), CorrelationMethod::SpearmanRank).unwrap();
        let peak = peak_period(&p, None).unwrap();
        assert!(peak.bin.abs_diff(p.nearest_bin(YEAR_DAYS)) <= 1);
    }

    #[test]
    fn gap_filling() {
        let s = [Some(1.0), None, None, Some(4.0), None];
        assert_eq!(fill_gaps(&s, 7).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 4.0]);
        assert!(matches!(fill_gaps(&s, 1), Err(SpectralError::Gap { start: 1, len: 2, .. })));
        assert!(fill_gaps(&[None, None], 7).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("pearson".parse::<CorrelationMethod>().unwrap(), CorrelationMethod::Pearson);
        assert_eq!("spearman".parse::<CorrelationMethod>().unwrap(), CorrelationMethod::SpearmanRank);
        assert!("kendall".parse::<CorrelationMethod>().is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert_eq!(quantile(&v, 0.125), 1.5);
    }
}
