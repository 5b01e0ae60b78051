//! Marginal distribution fitting and Kullback-Leibler ranking.
//!
//! Three candidate families are fitted by maximum likelihood: Weibull
//! (shape `k`, scale `λ`), Gamma (shape `α`, rate `β`) and the generalized
//! extreme value distribution (location `μ`, scale `σ`, shape `ξ`). The
//! goodness of fit is scored by
//!
//! ```text
//! D(p‖q) = -Ĥ(m, n) - (1/n) Σ ln q(X_i)
//! ```
//!
//! where `Ĥ` is the Vasicek spacing estimator of the sample's differential
//! entropy and `q` is the fitted density. Smaller is better.

use std::fmt;

use statrs::function::gamma::{digamma, gamma, ln_gamma};
use thiserror::Error;

use crate::optim::NelderMead;

/// Below this |ξ| the GEV density is evaluated through its Gumbel limit.
pub const GUMBEL_LIMIT: f64 = 1e-6;
/// Lower clamp on order-statistic spacings in the entropy estimator.
pub const MIN_SPACING: f64 = 1e-12;
pub const MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistributionFamily {
    Weibull,
    Gamma,
    Gev,
}

impl DistributionFamily {
    pub const ALL: [DistributionFamily; 3] = [Self::Weibull, Self::Gamma, Self::Gev];

    pub fn name(self) -> &'static str {
        match self {
            Self::Weibull => "weibull",
            Self::Gamma => "gamma",
            Self::Gev => "gev",
        }
    }
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("sample has {n} points, at least {MIN_SAMPLE} required")]
    TooSmall { n: usize },

    #[error("{family} requires positive values, found {value}")]
    NonPositive { family: DistributionFamily, value: f64 },

    #[error("sample contains a non-finite value")]
    NonFinite,

    #[error("degenerate sample: all values are equal")]
    Degenerate,

    #[error("{family} fit did not converge after {iterations} iterations")]
    NoConvergence {
        family: DistributionFamily,
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value {value} lies outside the support of the fitted {family} distribution")]
    Support { family: DistributionFamily, value: f64 },
}

/// A fully parameterized member of one of the three families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Weibull { shape: f64, scale: f64 },
    Gamma { shape: f64, rate: f64 },
    Gev { location: f64, scale: f64, shape: f64 },
}

impl Distribution {
    pub fn weibull(shape: f64, scale: f64) -> Result<Self, FitError> {
        Self::Weibull { shape, scale }.validated()
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self, FitError> {
        Self::Gamma { shape, rate }.validated()
    }

    pub fn gev(location: f64, scale: f64, shape: f64) -> Result<Self, FitError> {
        Self::Gev { location, scale, shape }.validated()
    }

    fn validated(self) -> Result<Self, FitError> {
        let ok = match self {
            Self::Weibull { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            Self::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Self::Gev { location, scale, shape } => {
                location.is_finite() && scale > 0.0 && scale.is_finite() && shape.is_finite()
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(FitError::Parameter(format!("invalid parameters {self:?}")))
        }
    }

    pub fn family(&self) -> DistributionFamily {
        match self {
            Self::Weibull { .. } => DistributionFamily::Weibull,
            Self::Gamma { .. } => DistributionFamily::Gamma,
            Self::Gev { .. } => DistributionFamily::Gev,
        }
    }

    /// Parameters in the order (Weibull: k, λ), (Gamma: α, β), (GEV: μ, σ, ξ).
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Weibull { shape, scale } => vec![shape, scale],
            Self::Gamma { shape, rate } => vec![shape, rate],
            Self::Gev { location, scale, shape } => vec![location, scale, shape],
        }
    }

    pub fn with_params(&self, p: &[f64]) -> Result<Self, FitError> {
        match self {
            Self::Weibull { .. } => Self::weibull(p[0], p[1]),
            Self::Gamma { .. } => Self::gamma(p[0], p[1]),
            Self::Gev { .. } => Self::gev(p[0], p[1], p[2]),
        }
    }

    /// Log-density; `None` outside the support.
    pub fn ln_pdf(&self, x: f64) -> Option<f64> {
        match *self {
            Self::Weibull { shape, scale } => {
                if x <= 0.0 {
                    return None;
                }
                let z = x / scale;
                Some(shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape))
            }
            Self::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return None;
                }
                Some(shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape))
            }
            Self::Gev { location, scale, shape } => {
                let z = (x - location) / scale;
                if shape.abs() < GUMBEL_LIMIT {
                    return Some(-scale.ln() - z - (-z).exp());
                }
                let t = 1.0 + shape * z;
                if t <= 0.0 {
                    return None;
                }
                let lt = t.ln();
                Some(-scale.ln() - (1.0 + 1.0 / shape) * lt - (-lt / shape).exp())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-(x / scale).powf(shape)).exp()
                }
            }
            Self::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(shape, rate * x)
                }
            }
            Self::Gev { location, scale, shape } => {
                let z = (x - location) / scale;
                if shape.abs() < GUMBEL_LIMIT {
                    return (-(-z).exp()).exp();
                }
                let t = 1.0 + shape * z;
                if t <= 0.0 {
                    return if shape > 0.0 { 0.0 } else { 1.0 };
                }
                (-t.powf(-1.0 / shape)).exp()
            }
        }
    }

    /// Inverse CDF for p in (0, 1). Closed form for Weibull and GEV only.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if !(p > 0.0 && p < 1.0) {
            return None;
        }
        match *self {
            Self::Weibull { shape, scale } => Some(scale * (-(1.0 - p).ln()).powf(1.0 / shape)),
            Self::Gamma { .. } => None,
            Self::Gev { location, scale, shape } => {
                let y = -p.ln();
                if shape.abs() < GUMBEL_LIMIT {
                    Some(location - scale * y.ln())
                } else {
                    Some(location + scale * (y.powf(-shape) - 1.0) / shape)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub distribution: Distribution,
    pub log_likelihood: f64,
    pub sample_size: usize,
}

impl FitResult {
    pub fn family(&self) -> DistributionFamily {
        self.distribution.family()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KldScore {
    pub family: DistributionFamily,
    pub divergence: f64,
}

/// Sample log-likelihood; `-inf` if any point lies outside the support.
pub fn log_likelihood(sample: &[f64], dist: &Distribution) -> f64 {
    let mut acc = 0.0;
    for &x in sample {
        match dist.ln_pdf(x) {
            Some(v) => acc += v,
            None => return f64::NEG_INFINITY,
        }
    }
    acc
}

fn check_sample(sample: &[f64], family: DistributionFamily) -> Result<(), FitError> {
    if sample.len() < MIN_SAMPLE {
        return Err(FitError::TooSmall { n: sample.len() });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFinite);
    }
    if family != DistributionFamily::Gev {
        if let Some(&value) = sample.iter().find(|&&x| x <= 0.0) {
            return Err(FitError::NonPositive { family, value });
        }
    }
    let (lo, hi) = sample
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
        return Err(FitError::Degenerate);
    }
    Ok(())
}

/// Maximum-likelihood fit of `family` to `sample`.
pub fn fit(sample: &[f64], family: DistributionFamily) -> Result<FitResult, FitError> {
    check_sample(sample, family)?;
    match family {
        DistributionFamily::Weibull => fit_weibull(sample),
        DistributionFamily::Gamma => fit_gamma(sample),
        DistributionFamily::Gev => fit_gev(sample),
    }
}

fn finish(sample: &[f64], distribution: Distribution) -> FitResult {
    FitResult {
        log_likelihood: log_likelihood(sample, &distribution),
        distribution,
        sample_size: sample.len(),
    }
}

/// Solves `g(u) = 0` on `[lo, hi]` by bisection for an increasing `g`.
/// Returns `Err(best)` if the root is not bracketed.
fn bisect_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> Result<f64, f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if glo > 0.0 {
        return Err(lo);
    }
    if ghi < 0.0 {
        return Err(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Profile likelihood in the shape: λ(k) = (mean x^k)^(1/k) and k solves
/// Σ x^k ln x / Σ x^k - 1/k - mean(ln x) = 0, monotone in k.
fn fit_weibull(sample: &[f64]) -> Result<FitResult, FitError> {
    let n = sample.len() as f64;
    let logs: Vec<f64> = sample.iter().map(|x| x.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let weighted_log_mean = |k: f64| {
        let max = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(k * l));
        let (mut num, mut den) = (0.0, 0.0);
        for &l in &logs {
            let w = (k * l - max).exp();
            num += w * l;
            den += w;
        }
        num / den
    };
    let scale_for = |k: f64| ((log_sum_exp(logs.iter().map(|l| k * l)) - n.ln()) / k).exp();
    let g = |u: f64| {
        let k = u.exp();
        weighted_log_mean(k) - 1.0 / k - mean_log
    };
    match bisect_increasing(g, (1e-3f64).ln(), (1e3f64).ln()) {
        Ok(u) => {
            let k = u.exp();
            Ok(finish(sample, Distribution::weibull(k, scale_for(k))?))
        }
        Err(u) => {
            let k = u.exp();
            Err(FitError::NoConvergence {
                family: DistributionFamily::Weibull,
                iterations: 0,
                best: Box::new(finish(sample, Distribution::weibull(k, scale_for(k))?)),
            })
        }
    }
}

/// Solves ln α - ψ(α) = ln(mean x) - mean(ln x); the rate is then α / mean x.
fn fit_gamma(sample: &[f64]) -> Result<FitResult, FitError> {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mean_log = sample.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if s <= 0.0 {
        return Err(FitError::Degenerate);
    }
    // ln α - ψ(α) is decreasing, so negate it for the increasing solver.
    let g = |u: f64| {
        let a = u.exp();
        s - (a.ln() - digamma(a))
    };
    match bisect_increasing(g, -20.0, 20.0) {
        Ok(u) => {
            let a = u.exp();
            Ok(finish(sample, Distribution::gamma(a, a / mean)?))
        }
        Err(u) => {
            let a = u.exp();
            Err(FitError::NoConvergence {
                family: DistributionFamily::Gamma,
                iterations: 0,
                best: Box::new(finish(sample, Distribution::gamma(a, a / mean)?)),
            })
        }
    }
}

/// Probability-weighted-moment estimates of (μ, σ, ξ).
pub fn gev_pwm_start(sample: &[f64]) -> (f64, f64, f64) {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (j, &v) in x.iter().enumerate() {
        let j = j as f64;
        b0 += v;
        b1 += v * j / (n - 1.0);
        b2 += v * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;
    let c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - 2f64.ln() / 3f64.ln();
    // Hosking's shape convention is the negative of ξ.
    let k = 7.8590 * c + 2.9554 * c * c;
    if !k.is_finite() || k.abs() < 1e-6 {
        let scale = (2.0 * b1 - b0) / 2f64.ln();
        return (b0 - 0.577_215_664_901_532_9 * scale, scale, 0.0);
    }
    let g = gamma(1.0 + k);
    let scale = (2.0 * b1 - b0) * k / (g * (1.0 - 2f64.powf(-k)));
    let location = b0 + scale * (g - 1.0) / k;
    (location, scale, -k)
}

fn fit_gev(sample: &[f64]) -> Result<FitResult, FitError> {
    let (mu0, sigma0, mut xi0) = gev_pwm_start(sample);
    let sigma0 = if sigma0.is_finite() && sigma0 > 0.0 {
        sigma0
    } else {
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let mu0 = if mu0.is_finite() { mu0 } else { 0.0 };
    if !xi0.is_finite() {
        xi0 = 0.0;
    }
    let xi0 = xi0.clamp(-0.9, 2.0);

    let objective = |theta: &[f64]| {
        let (mu, log_sigma, xi) = (theta[0], theta[1], theta[2]);
        if xi <= -1.0 || !log_sigma.is_finite() {
            return f64::INFINITY;
        }
        let dist = Distribution::Gev {
            location: mu,
            scale: log_sigma.exp(),
            shape: xi,
        };
        -log_likelihood(sample, &dist)
    };

    // Shrink ξ toward the always-feasible Gumbel limit until the start
    // covers the whole sample.
    let mut xi_start = xi0;
    while objective(&[mu0, sigma0.ln(), xi_start]).is_infinite() && xi_start != 0.0 {
        xi_start = if xi_start.abs() < 1e-3 { 0.0 } else { xi_start * 0.5 };
    }

    let nm = NelderMead::default();
    let mut start = vec![mu0, sigma0.ln(), xi_start];
    let mut best = nm.minimize(objective, &start, &[0.1 * sigma0, 0.1, 0.05]);
    let mut total_iterations = best.iterations;
    // Restarting from the optimum guards against premature simplex collapse.
    for _ in 0..4 {
        start.clone_from(&best.point);
        let again = nm.minimize(objective, &start, &[0.02 * sigma0, 0.02, 0.01]);
        total_iterations += again.iterations;
        let improved = again.value < best.value - 1e-10 * (1.0 + best.value.abs());
        let converged = again.converged;
        if again.value <= best.value {
            best = again;
        }
        if converged && !improved {
            break;
        }
    }

    let dist = Distribution::Gev {
        location: best.point[0],
        scale: best.point[1].exp(),
        shape: best.point[2],
    };
    let result = finish(sample, dist);
    if !best.converged || !result.log_likelihood.is_finite() {
        return Err(FitError::NoConvergence {
            family: DistributionFamily::Gev,
            iterations: total_iterations,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Window size default: ⌊√n⌋, kept strictly below n/2.
pub fn default_window(n: usize) -> usize {
    let m = (n as f64).sqrt().floor() as usize;
    m.min((n.saturating_sub(1)) / 2).max(1)
}

/// Vasicek spacing estimator of differential entropy,
/// (1/n) Σ ln{ n/(2m) · (X_(i+m) − X_(i−m)) }, with order statistics clamped
/// at the sample ends and spacings clamped below at [`MIN_SPACING`].
pub fn vasicek_entropy(sample: &[f64], m: usize) -> Result<f64, FitError> {
    let n = sample.len();
    if m == 0 || 2 * m >= n {
        return Err(FitError::Parameter(format!(
            "window m = {m} must satisfy 1 <= m < n/2 for n = {n}"
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let factor = n as f64 / (2.0 * m as f64);
    let sum: f64 = (0..n)
        .map(|i| {
            let hi = x[(i + m).min(n - 1)];
            let lo = x[i.saturating_sub(m)];
            (factor * (hi - lo).max(MIN_SPACING)).ln()
        })
        .sum();
    Ok(sum / n as f64)
}

/// Divergence of the sample from the fitted density: −Ĥ − mean ln q(Xᵢ).
pub fn kld(sample: &[f64], fit: &FitResult, m: usize) -> Result<KldScore, FitError> {
    let entropy = vasicek_entropy(sample, m)?;
    let dist = &fit.distribution;
    let mut cross = 0.0;
    for &x in sample {
        cross += dist.ln_pdf(x).ok_or(FitError::Support {
            family: dist.family(),
            value: x,
        })?;
    }
    Ok(KldScore {
        family: dist.family(),
        divergence: -entropy - cross / sample.len() as f64,
    })
}

/// Closed-form Gamma divergence ln Γ(α) + X̄ − (α−1)·mean(ln X) − Ĥ, valid
/// for unit rate. A general rate is handled by rescaling the sample by β.
pub fn kld_gamma_closed_form(sample: &[f64], shape: f64, rate: f64, m: usize) -> Result<f64, FitError> {
    if let Some(&value) = sample.iter().find(|&&x| x <= 0.0) {
        return Err(FitError::Support {
            family: DistributionFamily::Gamma,
            value,
        });
    }
    let scaled: Vec<f64> = if rate == 1.0 {
        sample.to_vec()
    } else {
        sample.iter().map(|x| x * rate).collect()
    };
    let n = scaled.len() as f64;
    let mean = scaled.iter().sum::<f64>() / n;
    let mean_log = scaled.iter().map(|x| x.ln()).sum::<f64>() / n;
    let entropy = vasicek_entropy(&scaled, m)?;
    Ok(-entropy + ln_gamma(shape) + mean - (shape - 1.0) * mean_log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFit {
    pub fit: FitResult,
    pub score: KldScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Ascending divergence, best first.
    pub ranked: Vec<RankedFit>,
    /// Families whose fit or score failed, with the reason.
    pub failures: Vec<(DistributionFamily, FitError)>,
}

impl Ranking {
    pub fn scores(&self) -> Vec<KldScore> {
        self.ranked.iter().map(|r| r.score).collect()
    }

    pub fn best(&self) -> Option<DistributionFamily> {
        self.ranked.first().map(|r| r.score.family)
    }
}

/// Fits and scores every family. Single-family failures are collected in
/// [`Ranking::failures`]; the call errors only on an invalid window `m`.
pub fn rank_families(sample: &[f64], m: usize) -> Result<Ranking, FitError> {
    if m == 0 || 2 * m >= sample.len() {
        return Err(FitError::Parameter(format!(
            "window m = {m} must satisfy 1 <= m < n/2 for n = {}",
            sample.len()
        )));
    }
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for family in DistributionFamily::ALL {
        match fit(sample, family).and_then(|f| kld(sample, &f, m).map(|s| (f, s))) {
            Ok((fit, score)) => ranked.push(RankedFit { fit, score }),
            Err(e) => failures.push((family, e)),
        }
    }
    ranked.sort_by(|a, b| rank_order(&a.score, &b.score));
    Ok(Ranking { ranked, failures })
}

/// Ascending divergence; ties go to the earlier family tag.
fn rank_order(a: &KldScore, b: &KldScore) -> std::cmp::Ordering {
    a.divergence
        .total_cmp(&b.divergence)
        .then(a.family.cmp(&b.family))
}
