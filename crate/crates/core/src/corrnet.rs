//! Per-window correlation networks and the connectivity density series.
//!
//! For each window the Pearson correlation of every station pair is computed
//! on pairwise-complete samples, edges are admitted by a [`ThresholdRule`],
//! and the density `E / (N(N-1)/2)` is recorded. The denominator always uses
//! every station in the panel, including stations with no valid pair that
//! window, so densities stay comparable across windows.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{format_timestamp, WindowedPanel};

/// Half a day of 10-minute samples.
pub const DEFAULT_MIN_OVERLAP: usize = 72;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("length mismatch: {0} vs {1}")]
    Shape(usize, usize),

    #[error("need at least 2 stations, got {0}")]
    Size(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid threshold rule '{0}'")]
    Rule(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Edge-admission predicate on a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// ρ ≥ τ, τ ∈ (0, 1]
    PositiveAtLeast(f64),
    /// ρ ≤ τ, τ ∈ [−1, 0)
    NegativeAtMost(f64),
    /// |ρ| ≥ τ, τ ∈ (0, 1]
    AbsoluteAtLeast(f64),
    /// lo ≤ ρ < hi, closed at the top when hi = 1.
    Band { lo: f64, hi: f64 },
}

impl ThresholdRule {
    pub fn positive(tau: f64) -> Result<Self, CorrError> {
        Self::PositiveAtLeast(tau).validated()
    }

    pub fn negative(tau: f64) -> Result<Self, CorrError> {
        Self::NegativeAtMost(tau).validated()
    }

    pub fn absolute(tau: f64) -> Result<Self, CorrError> {
        Self::AbsoluteAtLeast(tau).validated()
    }

    pub fn band(lo: f64, hi: f64) -> Result<Self, CorrError> {
        Self::Band { lo, hi }.validated()
    }

    pub fn validated(self) -> Result<Self, CorrError> {
        let ok = match self {
            Self::PositiveAtLeast(t) | Self::AbsoluteAtLeast(t) => t > 0.0 && t <= 1.0,
            Self::NegativeAtMost(t) => (-1.0..0.0).contains(&t),
            Self::Band { lo, hi } => lo >= -1.0 && lo < hi && hi <= 1.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(CorrError::Rule(self.to_string()))
        }
    }

    pub fn admits(&self, rho: f64) -> bool {
        match *self {
            Self::PositiveAtLeast(t) => rho >= t,
            Self::NegativeAtMost(t) => rho <= t,
            Self::AbsoluteAtLeast(t) => rho.abs() >= t,
            Self::Band { lo, hi } => rho >= lo && (rho < hi || (hi == 1.0 && rho <= 1.0)),
        }
    }

    /// Signed threshold for single-threshold rules; `None` for bands.
    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Self::PositiveAtLeast(t) | Self::NegativeAtMost(t) | Self::AbsoluteAtLeast(t) => Some(t),
            Self::Band { .. } => None,
        }
    }

    /// Filesystem-friendly label, e.g. `pos_0.2` or `band_0.3_0.4`.
    pub fn file_stem(&self) -> String {
        self.to_string().replace(':', "_")
    }

    /// Edges of `[-1, 1]` split into `count` equal bands; the last is closed.
    pub fn band_partition(count: usize) -> Vec<ThresholdRule> {
        let edge = |i: usize| -1.0 + 2.0 * i as f64 / count as f64;
        (0..count)
            .map(|i| {
                let hi = if i + 1 == count { 1.0 } else { edge(i + 1) };
                ThresholdRule::Band { lo: edge(i), hi }
            })
            .collect()
    }

    /// Parses a comma-separated list such as `pos:0.2,neg:-0.4,band:0.3:0.4`.
    pub fn parse_list(s: &str) -> Result<Vec<ThresholdRule>, CorrError> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PositiveAtLeast(t) => write!(f, "pos:{t}"),
            Self::NegativeAtMost(t) => write!(f, "neg:{t}"),
            Self::AbsoluteAtLeast(t) => write!(f, "abs:{t}"),
            Self::Band { lo, hi } => write!(f, "band:{lo}:{hi}"),
        }
    }
}

impl FromStr for ThresholdRule {
    type Err = CorrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorrError::Rule(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64, CorrError> {
            parts.get(i).ok_or_else(bad)?.trim().parse().map_err(|_| bad())
        };
        let rule = match (parts[0], parts.len()) {
            ("pos", 2) => Self::PositiveAtLeast(num(1)?),
            ("neg", 2) => Self::NegativeAtMost(num(1)?),
            ("abs", 2) => Self::AbsoluteAtLeast(num(1)?),
            ("band", 3) => Self::Band { lo: num(1)?, hi: num(2)? },
            _ => return Err(bad()),
        };
        rule.validated()
    }
}

/// Pearson correlation over pairwise-complete indices. `None` when the
/// overlap is shorter than `min_overlap` or either side has zero variance on
/// it. The result is clamped to [−1, 1].
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>], min_overlap: usize) -> Result<Option<f64>, CorrError> {
    if x.len() != y.len() {
        return Err(CorrError::Shape(x.len(), y.len()));
    }
    if min_overlap < 3 {
        return Err(CorrError::Parameter(format!("min_overlap must be >= 3, got {min_overlap}")));
    }
    Ok(pearson_unchecked(x, y, min_overlap))
}

fn pearson_unchecked(x: &[Option<f64>], y: &[Option<f64>], min_overlap: usize) -> Option<f64> {
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            n += 1;
            sx += a;
            sy += b;
        }
    }
    if n < min_overlap {
        return None;
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            let (dx, dy) = (a - mx, b - my);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Symmetric correlation matrix with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub station_ids: Vec<String>,
    entries: Vec<f64>,
    valid: Vec<bool>,
}

impl CorrelationMatrix {
    /// Builds a matrix from the strict upper triangle, row by row
    /// (`(0,1), (0,2), …, (1,2), …`). `None` marks an invalid pair.
    pub fn from_upper(station_ids: Vec<String>, upper: &[Option<f64>]) -> Result<Self, CorrError> {
        let n = station_ids.len();
        if n < 2 {
            return Err(CorrError::Size(n));
        }
        if upper.len() != n * (n - 1) / 2 {
            return Err(CorrError::Shape(upper.len(), n * (n - 1) / 2));
        }
        let mut entries = vec![0.0; n * n];
        let mut valid = vec![false; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
            valid[i * n + i] = true;
        }
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if let Some(r) = upper[k] {
                    let r = r.clamp(-1.0, 1.0);
                    entries[i * n + j] = r;
                    entries[j * n + i] = r;
                    valid[i * n + j] = true;
                    valid[j * n + i] = true;
                }
                k += 1;
            }
        }
        Ok(Self { station_ids, entries, valid })
    }

    pub fn size(&self) -> usize {
        self.station_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.size();
        self.valid[i * n + j].then(|| self.entries[i * n + j])
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.size() + j]
    }

    pub fn valid_pairs(&self) -> usize {
        let n = self.size();
        (0..n).map(|i| (i + 1..n).filter(|&j| self.is_valid(i, j)).count()).sum()
    }

    /// Stations that take part in at least one valid pair.
    pub fn valid_stations(&self) -> usize {
        let n = self.size();
        (0..n)
            .filter(|&i| (0..n).any(|j| j != i && self.is_valid(i, j)))
            .count()
    }
}

pub fn correlation_matrix(panel: &WindowedPanel, min_overlap: usize) -> Result<CorrelationMatrix, CorrError> {
    let n = panel.station_count();
    if n < 2 {
        return Err(CorrError::Size(n));
    }
    if min_overlap < 3 {
        return Err(CorrError::Parameter(format!("min_overlap must be >= 3, got {min_overlap}")));
    }
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            upper.push(pearson_unchecked(&panel.columns[i], &panel.columns[j], min_overlap));
        }
    }
    CorrelationMatrix::from_upper(panel.station_ids.clone(), &upper)
}

/// Undirected graph on the panel's stations; edges hold node indices with i < j.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    pub station_ids: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl CorrelationGraph {
    pub fn node_count(&self) -> usize {
        self.station_ids.len()
    }
}

pub fn apply_rule(matrix: &CorrelationMatrix, rule: &ThresholdRule) -> CorrelationGraph {
    let n = matrix.size();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if matrix.get(i, j).is_some_and(|r| rule.admits(r)) {
                edges.push((i, j));
            }
        }
    }
    CorrelationGraph {
        station_ids: matrix.station_ids.clone(),
        edges,
    }
}

pub fn connectivity_density(graph: &CorrelationGraph) -> Result<f64, CorrError> {
    let n = graph.node_count();
    if n < 2 {
        return Err(CorrError::Size(n));
    }
    Ok(graph.edges.len() as f64 / (n * (n - 1) / 2) as f64)
}

/// One density per window. `None` marks a window with fewer than two
/// stations that take part in any valid pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub rule: ThresholdRule,
    pub window_starts: Vec<DateTime<Utc>>,
    pub densities: Vec<Option<f64>>,
    pub valid_pairs: Vec<usize>,
}

impl DensitySeries {
    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        let present: Vec<f64> = self.densities.iter().flatten().copied().collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }

    pub fn missing_slots(&self) -> usize {
        self.densities.iter().filter(|d| d.is_none()).count()
    }
}

/// Correlation matrices for all panels, computed in parallel, in order.
pub fn window_matrices(panels: &[WindowedPanel], min_overlap: usize) -> Result<Vec<CorrelationMatrix>, CorrError> {
    panels
        .par_iter()
        .map(|p| correlation_matrix(p, min_overlap))
        .collect()
}

/// Densities for several rules over precomputed matrices.
pub fn density_from_matrices(
    window_starts: &[DateTime<Utc>],
    matrices: &[CorrelationMatrix],
    rule: &ThresholdRule,
) -> Result<DensitySeries, CorrError> {
    if window_starts.len() != matrices.len() {
        return Err(CorrError::Shape(window_starts.len(), matrices.len()));
    }
    let mut densities = Vec::with_capacity(matrices.len());
    let mut valid_pairs = Vec::with_capacity(matrices.len());
    for m in matrices {
        valid_pairs.push(m.valid_pairs());
        if m.valid_stations() < 2 {
            densities.push(None);
        } else {
            densities.push(Some(connectivity_density(&apply_rule(m, rule))?));
        }
    }
    Ok(DensitySeries {
        rule: *rule,
        window_starts: window_starts.to_vec(),
        densities,
        valid_pairs,
    })
}

pub fn density_series(
    panels: &[WindowedPanel],
    rule: &ThresholdRule,
    min_overlap: usize,
) -> Result<DensitySeries, CorrError> {
    Ok(density_series_multi(panels, std::slice::from_ref(rule), min_overlap)?.remove(0))
}

/// Density series for every rule, sharing one pass of correlation matrices.
pub fn density_series_multi(
    panels: &[WindowedPanel],
    rules: &[ThresholdRule],
    min_overlap: usize,
) -> Result<Vec<DensitySeries>, CorrError> {
    if panels.is_empty() {
        return Err(CorrError::Parameter("no windows to process".into()));
    }
    if let Some(w) = panels.windows(2).find(|w| w[1].window_start <= w[0].window_start) {
        return Err(CorrError::Parameter(format!(
            "windows out of order at {}",
            format_timestamp(w[1].window_start)
        )));
    }
    let matrices = window_matrices(panels, min_overlap)?;
    let starts: Vec<_> = panels.iter().map(|p| p.window_start).collect();
    rules
        .iter()
        .map(|r| density_from_matrices(&starts, &matrices, r))
        .collect()
}

/// 12 significant digits with trailing zeros trimmed; used for all numeric
/// CSV output.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `window_start,rule,density,valid_pairs`; a missing density is an empty field.
pub fn write_density_csv<W: Write>(series: &DensitySeries, out: W) -> Result<(), CorrError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_start", "rule", "density", "valid_pairs"])?;
    let rule = series.rule.to_string();
    for ((t, d), v) in series.window_starts.iter().zip(&series.densities).zip(&series.valid_pairs) {
        w.write_record([
            format_timestamp(*t),
            rule.clone(),
            d.map(format_number).unwrap_or_default(),
            v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list `station_a,station_b,rho` of one window's graph.
pub fn write_edge_list_csv<W: Write>(
    matrix: &CorrelationMatrix,
    graph: &CorrelationGraph,
    out: W,
) -> Result<(), CorrError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["station_a", "station_b", "rho"])?;
    for &(i, j) in &graph.edges {
        let rho = matrix.get(i, j).expect("edges are valid pairs");
        w.write_record([
            graph.station_ids[i].as_str(),
            graph.station_ids[j].as_str(),
            &format_number(rho),
        ])?;
    }
    w.flush()?;
    Ok(())
}
