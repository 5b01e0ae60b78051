//! Command-line front end for the windnet pipeline.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::Result;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use windnet::synthetic::SyntheticCorpus;

use crate::config::{PipelineConfig, RawConfig};
use crate::output::Written;

/// An input file that could not be opened; reported with exit status 2.
#[derive(Debug)]
pub struct InputError {
    pub path: PathBuf,
    pub source: io::Error,
}

impl InputError {
    pub fn new(path: &Path, source: io::Error) -> Self {
        Self { path: path.to_path_buf(), source }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot read {}", self.path.display())
    }
}

impl std::error::Error for InputError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Parser)]
#[command(name = "windnet", version, about = "Correlation-network periodicity analysis of station time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Weibull, Gamma and GEV per station and rank them by KLD.
    Fit,
    /// Daily connectivity density series per threshold rule.
    Density,
    /// Robust and classical periodograms of the density series, with peaks.
    Periodogram,
    /// iid GEV surrogate experiment.
    Surrogate,
    /// Run every stage.
    Report,
    /// Write a seeded synthetic corpus to OUT/synthetic.csv.
    Synth(SynthArgs),
}

/// Settings shared with the config file; a flag overrides its key.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Key-value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Station CSV path(s), comma separated.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Station metadata CSV (station,lat,lon,alt).
    #[arg(long, global = true)]
    pub stations: Option<String>,
    /// Threshold rules, e.g. "pos:0.2,neg:-0.4,abs:0.7,band:0.3:0.4".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rules: Option<String>,
    /// Window length, e.g. 1d or 12h.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Maximum lag L of the robust periodogram (default N/3).
    #[arg(long, global = true)]
    pub lag_max: Option<String>,
    /// pearson or spearman.
    #[arg(long, global = true)]
    pub corr_method: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Minimum pairwise-complete samples per correlation.
    #[arg(long, global = true)]
    pub min_overlap: Option<String>,
    /// Vasicek spacing window m (default sqrt(n)).
    #[arg(long, global = true)]
    pub vasicek_m: Option<String>,
    /// Sampling interval of the input grid, e.g. 10m.
    #[arg(long, global = true)]
    pub sample_interval: Option<String>,
    /// Value that marks a missing sample.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub missing_sentinel: Option<String>,
    /// Offset of local time used for window boundaries, e.g. +01:00.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub utc_offset: Option<String>,
    /// Write edge lists for the window containing this timestamp.
    #[arg(long, global = true)]
    pub snapshot: Option<String>,
    /// Also run the GEV surrogate experiment.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub surrogate: Option<String>,
}

impl Flags {
    pub fn overlay(&self, raw: &mut RawConfig) {
        let pairs = [
            ("input", &self.input),
            ("stations", &self.stations),
            ("rules", &self.rules),
            ("window", &self.window),
            ("lag_max", &self.lag_max),
            ("corr_method", &self.corr_method),
            ("seed", &self.seed),
            ("out", &self.out),
            ("min_overlap", &self.min_overlap),
            ("vasicek_m", &self.vasicek_m),
            ("sample_interval", &self.sample_interval),
            ("missing_sentinel", &self.missing_sentinel),
            ("utc_offset", &self.utc_offset),
            ("snapshot", &self.snapshot),
            ("surrogate", &self.surrogate),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v.clone());
            }
        }
    }

    pub fn resolve(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        self.overlay(&mut raw);
        Ok(raw)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub station_count: usize,
    #[arg(long, default_value_t = 1827)]
    pub days: usize,
    #[arg(long, default_value_t = 144)]
    pub samples_per_day: usize,
    /// First day, YYYY-MM-DD.
    #[arg(long, default_value = "2012-01-01")]
    pub start: NaiveDate,
    /// Drop the annual modulation.
    #[arg(long)]
    pub stationary: bool,
    #[arg(long, default_value_t = 0.0)]
    pub missing_fraction: f64,
}

impl SynthArgs {
    pub fn corpus(&self, seed: u64) -> SyntheticCorpus {
        SyntheticCorpus {
            stations: self.station_count,
            start: self.start,
            days: self.days,
            samples_per_day: self.samples_per_day,
            seasonal: !self.stationary,
            missing_fraction: self.missing_fraction,
            seed,
            ..SyntheticCorpus::default()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Written> {
    let raw = cli.flags.resolve()?;
    if let Command::Synth(args) = &cli.command {
        let seed = match raw.get("seed") {
            Some(s) => s.parse().map_err(|e| anyhow::anyhow!("invalid seed '{s}': {e}"))?,
            None => SyntheticCorpus::default().seed,
        };
        if args.station_count < 2 || args.days == 0 || args.samples_per_day == 0 || 86_400 % args.samples_per_day != 0 {
            anyhow::bail!("synth needs at least 2 stations, 1 day and a sample count dividing 86400");
        }
        let out = PathBuf::from(raw.get("out").unwrap_or("out"));
        return commands::cmd_synth(&args.corpus(seed), &out);
    }
    let cfg = PipelineConfig::from_raw(&raw)?;
    match cli.command {
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Density => commands::cmd_density(&cfg),
        Command::Periodogram => commands::cmd_periodogram(&cfg),
        Command::Surrogate => commands::cmd_surrogate(&cfg),
        Command::Report => commands::cmd_report(&cfg),
        Command::Synth(_) => unreachable!("handled above"),
    }
}

/// Exit status for a failed run: 2 when an input could not be read.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.downcast_ref::<InputError>().is_some()) {
        2
    } else {
        1
    }
}
