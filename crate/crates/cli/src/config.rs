//! Flat `key = value` configuration merged with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, TimeDelta, Utc};
use windnet::corrnet::{ThresholdRule, DEFAULT_MIN_OVERLAP};
use windnet::ingest::{self, ColumnSpec, WindowSpec};
use windnet::spectral::CorrelationMethod;

use crate::InputError;

pub const KEYS: &[&str] = &[
    "input",
    "stations",
    "rules",
    "window",
    "lag_max",
    "corr_method",
    "seed",
    "out",
    "min_overlap",
    "vasicek_m",
    "sample_interval",
    "missing_sentinel",
    "utc_offset",
    "snapshot",
    "surrogate",
    "timestamp_column",
    "station_column",
    "value_column",
];

pub const DEFAULT_RULES: &str = "pos:0.2,neg:-0.2";

/// Raw settings before validation. Later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", n + 1))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key '{key}'", n + 1);
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| InputError::new(path, e))?;
        Self::parse(&text).with_context(|| format!("reading config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("invalid {key} '{v}': {e}")))
            .transpose()
    }
}

/// Validated settings shared by all commands.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub stations: Option<PathBuf>,
    pub columns: ColumnSpec,
    pub window: WindowSpec,
    pub rules: Vec<ThresholdRule>,
    pub min_overlap: usize,
    pub vasicek_m: Option<usize>,
    pub max_lag: Option<usize>,
    pub method: CorrelationMethod,
    pub out: PathBuf,
    pub seed: u64,
    pub snapshot: Option<DateTime<Utc>>,
    pub surrogate: bool,
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("invalid {key} '{v}': expected true or false"),
    }
}

fn parse_offset(v: &str) -> Result<TimeDelta> {
    let (sign, rest) = match v.as_bytes().first() {
        Some(b'-') => (-1, &v[1..]),
        Some(b'+') => (1, &v[1..]),
        _ => (1, v),
    };
    let d = if let Some((h, m)) = rest.split_once(':') {
        let h: i64 = h.parse().map_err(|_| anyhow!("invalid utc_offset '{v}'"))?;
        let m: i64 = m.parse().map_err(|_| anyhow!("invalid utc_offset '{v}'"))?;
        TimeDelta::hours(h) + TimeDelta::minutes(m)
    } else {
        ingest::parse_duration(rest).map_err(|e| anyhow!("invalid utc_offset '{v}': {e}"))?
    };
    Ok(d * sign)
}

impl PipelineConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let inputs: Vec<PathBuf> = raw
            .get("input")
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect())
            .unwrap_or_default();
        if inputs.is_empty() {
            bail!("no input given; pass --input PATH or set `input` in the config");
        }
        for p in &inputs {
            if !p.is_file() {
                return Err(InputError::new(p, std::io::Error::from(std::io::ErrorKind::NotFound)).into());
            }
        }
        let stations = raw.get("stations").map(PathBuf::from);
        if let Some(p) = &stations {
            if !p.is_file() {
                return Err(InputError::new(p, std::io::Error::from(std::io::ErrorKind::NotFound)).into());
            }
        }

        let mut columns = ColumnSpec::default();
        if let Some(v) = raw.get("sample_interval") {
            columns.sample_interval = ingest::parse_duration(v)?;
        }
        columns.missing_sentinel = raw.parsed("missing_sentinel")?;
        for (key, field) in [
            ("timestamp_column", &mut columns.timestamp),
            ("station_column", &mut columns.station),
            ("value_column", &mut columns.value),
        ] {
            if let Some(v) = raw.get(key) {
                *field = v.to_string();
            }
        }

        let mut window = WindowSpec::new(ingest::parse_duration(raw.get("window").unwrap_or("1d"))?);
        if let Some(v) = raw.get("utc_offset") {
            window = window.with_utc_offset(parse_offset(v)?);
        }
        let rules = ThresholdRule::parse_list(raw.get("rules").unwrap_or(DEFAULT_RULES))?;
        if rules.is_empty() {
            bail!("at least one threshold rule is required");
        }
        let snapshot = raw
            .get("snapshot")
            .map(|v| ingest::parse_timestamp(v).ok_or_else(|| anyhow!("invalid snapshot timestamp '{v}'")))
            .transpose()?;

        Ok(Self {
            inputs,
            stations,
            columns,
            window,
            rules,
            min_overlap: raw.parsed("min_overlap")?.unwrap_or(DEFAULT_MIN_OVERLAP),
            vasicek_m: raw.parsed("vasicek_m")?,
            max_lag: raw.parsed("lag_max")?,
            method: raw.parsed("corr_method")?.unwrap_or_default(),
            out: PathBuf::from(raw.get("out").unwrap_or("out")),
            seed: raw.parsed("seed")?.unwrap_or(0),
            snapshot,
            surrogate: raw.get("surrogate").map(|v| parse_bool("surrogate", v)).transpose()?.unwrap_or(false),
        })
    }
}
