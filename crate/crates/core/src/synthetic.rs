//! Seeded synthetic wind corpus with a seasonally modulated shared signal.
//!
//! Within each day, every station mixes a common AR(1) weather signal with
//! its own AR(1) noise. The common signal's loading changes sign between two
//! station groups, so pairs across groups are anti-correlated. The loading
//! strength follows an annual cosine with day-to-day lognormal jitter, which
//! makes within-day correlations, and hence connectivity density, cycle
//! yearly. Speeds are a positive exponential transform of the mixture.

use std::f64::consts::PI;

use chrono::{DateTime, NaiveDate, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ingest::StationSeries;
use crate::spectral::YEAR_DAYS;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub stations: usize,
    pub start: NaiveDate,
    pub days: usize,
    pub samples_per_day: usize,
    /// Annual modulation of the shared signal; off gives a stationary corpus.
    pub seasonal: bool,
    /// Peak coupling of the shared signal relative to station noise.
    pub coupling: f64,
    /// Floor of the seasonal coupling cycle, as a fraction of the peak.
    pub coupling_floor: f64,
    /// Standard deviation of the daily log-jitter on the coupling.
    pub jitter: f64,
    /// Fraction of samples blanked at random.
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpus {
    /// 20 stations, daily windows of 10-minute samples, 2012–2016.
    fn default() -> Self {
        Self {
            stations: 20,
            start: NaiveDate::from_ymd_opt(2012, 1, 1).expect("valid date"),
            days: 1827,
            samples_per_day: 144,
            seasonal: true,
            coupling: 1.2,
            coupling_floor: 0.0,
            jitter: 0.4,
            missing_fraction: 0.0,
            seed: 2012,
        }
    }
}

const COMMON_AR: f64 = 0.95;
const LOCAL_AR: f64 = 0.8;
const LOG_SCALE: f64 = 0.2;

struct Ar1 {
    phi: f64,
    innovation: f64,
    state: f64,
}

impl Ar1 {
    fn new<R: Rng>(phi: f64, rng: &mut R) -> Self {
        Self { phi, innovation: (1.0 - phi * phi).sqrt(), state: rng.sample(StandardNormal) }
    }

    fn step<R: Rng>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.state = self.phi * self.state + self.innovation * z;
        self.state
    }
}

impl SyntheticCorpus {
    pub fn sample_interval(&self) -> TimeDelta {
        TimeDelta::seconds(86_400 / self.samples_per_day as i64)
    }

    pub fn start_time(&self) -> DateTime<Utc> {
        self.start.and_hms_opt(0, 0, 0).expect("midnight").and_utc()
    }

    /// Coupling strength on day `d` before jitter.
    pub fn seasonal_coupling(&self, day: usize) -> f64 {
        if !self.seasonal {
            return self.coupling * (self.coupling_floor + (1.0 - self.coupling_floor) * 0.5);
        }
        let c = 0.5 * (1.0 + (2.0 * PI * day as f64 / YEAR_DAYS).cos());
        self.coupling * (self.coupling_floor + (1.0 - self.coupling_floor) * c)
    }

    pub fn generate(&self) -> Vec<StationSeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let sign: Vec<f64> = (0..self.stations)
            .map(|i| if i < self.stations.div_ceil(2) { 1.0 } else { -1.0 })
            .collect();
        let loading: Vec<f64> = (0..self.stations).map(|_| rng.random_range(0.8..1.2)).collect();
        let level: Vec<f64> = (0..self.stations).map(|_| rng.random_range(2.5..6.0)).collect();
        let mut values = vec![Vec::with_capacity(self.days * self.samples_per_day); self.stations];

        for day in 0..self.days {
            let jitter: f64 = if self.jitter > 0.0 {
                (self.jitter * rng.sample::<f64, _>(StandardNormal)).exp()
            } else {
                1.0
            };
            let coupling = self.seasonal_coupling(day) * jitter;
            let norm = (1.0 + coupling * coupling).sqrt();
            // windier winters
            let season = 1.0 + 0.25 * (2.0 * PI * day as f64 / YEAR_DAYS).cos();
            let mut common = Ar1::new(COMMON_AR, &mut rng);
            let mut local: Vec<Ar1> = (0..self.stations).map(|_| Ar1::new(LOCAL_AR, &mut rng)).collect();
            for _ in 0..self.samples_per_day {
                let c = common.step(&mut rng);
                for i in 0..self.stations {
                    let x = (coupling * sign[i] * loading[i] * c + local[i].step(&mut rng)) / norm;
                    let speed = level[i] * season * (LOG_SCALE * 2.0 * x).exp();
                    let missing = self.missing_fraction > 0.0 && rng.random::<f64>() < self.missing_fraction;
                    values[i].push((!missing).then_some(speed));
                }
            }
        }

        let start = self.start_time();
        let interval = self.sample_interval();
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| StationSeries::new(format!("ST{i:03}"), interval, start, v).expect("positive speeds"))
            .collect()
    }
}
