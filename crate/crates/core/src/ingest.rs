//! Station CSV ingestion, regular-grid alignment and calendar windowing.
//!
//! Every station is placed on a regular grid anchored at its first
//! timestamp. Rows that fall off that grid are rejected rather than rounded,
//! and gaps in the grid become missing entries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: station '{station}' timestamp {timestamp} is not on the {interval_secs}s grid anchored at {anchor}")]
    OffGrid {
        line: u64,
        station: String,
        timestamp: DateTime<Utc>,
        anchor: DateTime<Utc>,
        interval_secs: i64,
    },

    #[error("line {line}: duplicate observation for station '{station}' at {timestamp}")]
    Duplicate {
        line: u64,
        station: String,
        timestamp: DateTime<Utc>,
    },

    #[error("incompatible series: {0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Names of the CSV columns plus the declared sampling grid.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub timestamp: String,
    pub station: String,
    pub value: String,
    pub sample_interval: TimeDelta,
    /// Extra token treated as missing, in addition to the empty field.
    pub missing_sentinel: Option<String>,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            station: "station".into(),
            value: "speed".into(),
            sample_interval: TimeDelta::minutes(10),
            missing_sentinel: None,
        }
    }
}

/// One station's regularly sampled series; `None` marks a missing sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries {
    pub station_id: String,
    pub sample_interval: TimeDelta,
    pub start: DateTime<Utc>,
    pub values: Vec<Option<f64>>,
}

impl StationSeries {
    pub fn new(
        station_id: impl Into<String>,
        sample_interval: TimeDelta,
        start: DateTime<Utc>,
        values: Vec<Option<f64>>,
    ) -> Result<Self, IngestError> {
        if sample_interval <= TimeDelta::zero() {
            return Err(IngestError::Parameter(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(IngestError::Parameter(format!(
                "values must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self {
            station_id: station_id.into(),
            sample_interval,
            start,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + self.sample_interval * index as i32
    }

    /// Exclusive end: one interval past the last sample.
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.values.len())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Present values in time order.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// Calendar windowing parameters. Window boundaries sit at multiples of
/// `length` counted from the Unix epoch in local time, where local time is
/// UTC shifted by `utc_offset`; for one-day windows these are local midnights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub length: TimeDelta,
    pub utc_offset: TimeDelta,
}

impl WindowSpec {
    pub fn new(length: TimeDelta) -> Self {
        Self {
            length,
            utc_offset: TimeDelta::zero(),
        }
    }

    pub fn days(n: i64) -> Self {
        Self::new(TimeDelta::days(n))
    }

    pub fn with_utc_offset(mut self, offset: TimeDelta) -> Self {
        self.utc_offset = offset;
        self
    }

    fn first_boundary_at_or_after(&self, t: DateTime<Utc>) -> DateTime<Utc> {
        let len = self.length.num_seconds();
        let local = t.timestamp() + self.utc_offset.num_seconds();
        let k = local.div_euclid(len) + i64::from(local.rem_euclid(len) != 0);
        from_secs(k * len - self.utc_offset.num_seconds())
    }

    fn last_boundary_at_or_before(&self, t: DateTime<Utc>) -> DateTime<Utc> {
        let len = self.length.num_seconds();
        let local = t.timestamp() + self.utc_offset.num_seconds();
        from_secs(local.div_euclid(len) * len - self.utc_offset.num_seconds())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self::days(1)
    }
}

/// The cross-station slice of all series for one window. Stations without
/// coverage in the window contribute all-missing columns.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedPanel {
    pub window_start: DateTime<Utc>,
    pub window_length: TimeDelta,
    pub sample_interval: TimeDelta,
    pub station_ids: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
}

impl WindowedPanel {
    pub fn station_count(&self) -> usize {
        self.station_ids.len()
    }

    pub fn samples_per_window(&self) -> usize {
        (self.window_length.num_seconds() / self.sample_interval.num_seconds()) as usize
    }

    pub fn column(&self, station_id: &str) -> Option<&[Option<f64>]> {
        self.station_ids
            .iter()
            .position(|s| s == station_id)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn missing_fraction(&self) -> f64 {
        let total: usize = self.columns.iter().map(Vec::len).sum();
        if total == 0 {
            return 0.0;
        }
        let missing: usize = self
            .columns
            .iter()
            .map(|c| c.iter().filter(|v| v.is_none()).count())
            .sum();
        missing as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessReport {
    pub per_station_fraction: BTreeMap<String, f64>,
    pub window_starts: Vec<DateTime<Utc>>,
    pub per_window_fraction: Vec<f64>,
    pub total_fraction: f64,
}

impl MissingnessReport {
    pub fn max_window_fraction(&self) -> f64 {
        self.per_window_fraction.iter().copied().fold(0.0, f64::max)
    }
}

fn from_secs(secs: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(secs, 0).expect("timestamp in chrono range")
}

/// Accepts RFC 3339 timestamps, or naive `YYYY-MM-DD[T ]HH:MM[:SS]` read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|n| n.and_utc())
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses durations such as `10m`, `1d`, `6h`, `30s` or `1w`.
pub fn parse_duration(s: &str) -> Result<TimeDelta, IngestError> {
    let s = s.trim();
    let split = s
        .find(|c: char| !c.is_ascii_digit())
        .ok_or_else(|| IngestError::Parameter(format!("duration '{s}' has no unit")))?;
    let (num, unit) = s.split_at(split);
    let n: i64 = num
        .parse()
        .map_err(|_| IngestError::Parameter(format!("bad duration '{s}'")))?;
    let d = match unit {
        "s" => TimeDelta::seconds(n),
        "m" | "min" => TimeDelta::minutes(n),
        "h" => TimeDelta::hours(n),
        "d" => TimeDelta::days(n),
        "w" => TimeDelta::weeks(n),
        _ => return Err(IngestError::Parameter(format!("unknown duration unit in '{s}'"))),
    };
    if d <= TimeDelta::zero() {
        return Err(IngestError::Parameter(format!("duration '{s}' must be positive")));
    }
    Ok(d)
}

struct Row {
    line: u64,
    time: DateTime<Utc>,
    value: Option<f64>,
}

/// Parses long-format station CSV into one series per station, sorted by id.
pub fn parse_station_csv<R: Read>(
    input: R,
    schema: &ColumnSpec,
) -> Result<Vec<StationSeries>, IngestError> {
    let interval = schema.sample_interval;
    if interval <= TimeDelta::zero() || interval.subsec_nanos() != 0 {
        return Err(IngestError::Parameter(format!(
            "sample interval must be a positive whole number of seconds, got {interval}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (ts_col, st_col, val_col) = (col(&schema.timestamp)?, col(&schema.station)?, col(&schema.value)?);

    let mut rows: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            record.get(i).ok_or_else(|| IngestError::Parse {
                line,
                message: format!("row has {} fields, expected at least {}", record.len(), i + 1),
            })
        };
        let ts = field(ts_col)?;
        let time = parse_timestamp(ts).ok_or_else(|| IngestError::Parse {
            line,
            message: format!("unparseable timestamp '{ts}'"),
        })?;
        let station = field(st_col)?;
        if station.is_empty() {
            return Err(IngestError::Parse {
                line,
                message: "empty station id".into(),
            });
        }
        let raw = field(val_col)?;
        let value = if raw.is_empty() || schema.missing_sentinel.as_deref() == Some(raw) {
            None
        } else {
            let v: f64 = raw.parse().map_err(|_| IngestError::Parse {
                line,
                message: format!("unparseable value '{raw}'"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(IngestError::Parse {
                    line,
                    message: format!("value must be finite and non-negative, got '{raw}'"),
                });
            }
            Some(v)
        };
        rows.entry(station.to_string())
            .or_default()
            .push(Row { line, time, value });
    }

    let step = interval.num_seconds();
    let mut out = Vec::with_capacity(rows.len());
    for (station, mut rows) in rows {
        rows.sort_by_key(|r| (r.time, r.line));
        let anchor = rows[0].time;
        let last = rows[rows.len() - 1].time;
        let len = ((last - anchor).num_seconds() / step + 1) as usize;
        let mut values = vec![None; len];
        let mut seen = vec![false; len];
        for row in &rows {
            let offset = (row.time - anchor).num_seconds();
            if offset % step != 0 || (row.time - anchor).subsec_nanos() != 0 {
                return Err(IngestError::OffGrid {
                    line: row.line,
                    station,
                    timestamp: row.time,
                    anchor,
                    interval_secs: step,
                });
            }
            let idx = (offset / step) as usize;
            if seen[idx] {
                return Err(IngestError::Duplicate {
                    line: row.line,
                    station,
                    timestamp: row.time,
                });
            }
            seen[idx] = true;
            values[idx] = row.value;
        }
        out.push(StationSeries {
            station_id: station,
            sample_interval: interval,
            start: anchor,
            values,
        });
    }
    Ok(out)
}

/// Writes series in the `timestamp,station,speed` layout, one row per grid
/// slot; missing slots get an empty speed field.
pub fn write_station_csv<W: Write>(series: &[StationSeries], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "station", "speed"])?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            let value = v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([format_timestamp(s.timestamp(i)), s.station_id.clone(), value])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Optional station metadata row (`station,lat,lon,alt`).
#[derive(Debug, Clone, PartialEq)]
pub struct StationMeta {
    pub station: String,
    pub lat: String,
    pub lon: String,
    pub alt: String,
}

pub fn parse_station_metadata<R: Read>(input: R) -> Result<Vec<StationMeta>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let cols = [col("station")?, col("lat")?, col("lon")?, col("alt")?];
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(cols[i]).unwrap_or("").to_string();
        out.push(StationMeta {
            station: get(0),
            lat: get(1),
            lon: get(2),
            alt: get(3),
        });
    }
    Ok(out)
}

/// Checks that all series share one sample interval and one grid phase, and
/// that the window length is a positive multiple of the interval.
fn check_common_grid(series: &[StationSeries], window: &WindowSpec) -> Result<TimeDelta, IngestError> {
    let interval = series[0].sample_interval;
    if let Some(other) = series.iter().find(|s| s.sample_interval != interval) {
        return Err(IngestError::Incompatible(format!(
            "station '{}' has interval {} but '{}' has {}",
            other.station_id, other.sample_interval, series[0].station_id, interval
        )));
    }
    let step = interval.num_seconds();
    if let Some(other) = series
        .iter()
        .find(|s| (s.start - series[0].start).num_seconds() % step != 0)
    {
        return Err(IngestError::Incompatible(format!(
            "station '{}' is not on the same sampling grid as '{}'",
            other.station_id, series[0].station_id
        )));
    }
    let len = window.length.num_seconds();
    if window.length < interval || len % step != 0 || window.length.subsec_nanos() != 0 {
        return Err(IngestError::Parameter(format!(
            "window length {} must be a positive multiple of the sample interval {}",
            window.length, interval
        )));
    }
    Ok(interval)
}

/// Cuts the shared time span into consecutive full windows. Partial windows
/// at either edge are dropped.
pub fn window_panel(
    series: &[StationSeries],
    window: &WindowSpec,
) -> Result<Vec<WindowedPanel>, IngestError> {
    if series.is_empty() {
        return Ok(Vec::new());
    }
    if window.length <= TimeDelta::zero() {
        return Err(IngestError::Parameter("window length must be positive".into()));
    }
    let interval = check_common_grid(series, window)?;
    let span_start = series.iter().map(|s| s.start).min().expect("nonempty");
    let span_end = series.iter().map(StationSeries::end).max().expect("nonempty");
    let first = window.first_boundary_at_or_after(span_start);
    let last = window.last_boundary_at_or_before(span_end);
    if last <= first {
        return Ok(Vec::new());
    }
    let step = interval.num_seconds();
    let per_window = (window.length.num_seconds() / step) as usize;
    let count = ((last - first).num_seconds() / window.length.num_seconds()) as usize;
    let station_ids: Vec<String> = series.iter().map(|s| s.station_id.clone()).collect();

    let panels = (0..count)
        .map(|w| {
            let window_start = first + window.length * w as i32;
            let columns = series
                .iter()
                .map(|s| {
                    let offset = (window_start - s.start).num_seconds();
                    let j0 = offset.div_euclid(step) + i64::from(offset.rem_euclid(step) != 0);
                    (0..per_window as i64)
                        .map(|k| {
                            let j = j0 + k;
                            if j >= 0 && (j as usize) < s.values.len() {
                                s.values[j as usize]
                            } else {
                                None
                            }
                        })
                        .collect()
                })
                .collect();
            WindowedPanel {
                window_start,
                window_length: window.length,
                sample_interval: interval,
                station_ids: station_ids.clone(),
                columns,
            }
        })
        .collect();
    Ok(panels)
}

pub fn missing_report(
    series: &[StationSeries],
    window: &WindowSpec,
) -> Result<MissingnessReport, IngestError> {
    let panels = window_panel(series, window)?;
    let per_station_fraction = series
        .iter()
        .map(|s| {
            let f = if s.is_empty() {
                0.0
            } else {
                s.missing_count() as f64 / s.len() as f64
            };
            (s.station_id.clone(), f)
        })
        .collect();
    let total: usize = series.iter().map(StationSeries::len).sum();
    let missing: usize = series.iter().map(StationSeries::missing_count).sum();
    Ok(MissingnessReport {
        per_station_fraction,
        window_starts: panels.iter().map(|p| p.window_start).collect(),
        per_window_fraction: panels.iter().map(WindowedPanel::missing_fraction).collect(),
        total_fraction: if total == 0 { 0.0 } else { missing as f64 / total as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn two_stations_six_rows() {
        let csv = "timestamp,station,speed\n\
            2014-01-01T00:00:00Z,A,1.0\n2014-01-01T00:00:00Z,B,2.0\n\
            2014-01-01T00:10:00Z,A,1.5\n2014-01-01T00:10:00Z,B,2.5\n\
            2014-01-01T00:20:00Z,A,1.2\n2014-01-01T00:20:00Z,B,\n";
        let series = parse_station_csv(csv.as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(series.len(), 2);
        assert!(series.iter().all(|s| s.len() == 3));
        assert_eq!(series[1].values[2], None);
        assert_eq!(series[0].values, vec![Some(1.0), Some(1.5), Some(1.2)]);
    }

    #[test]
    fn gap_becomes_missing() {
        let csv = "timestamp,station,speed\n\
            2014-01-01 00:00,A,1\n2014-01-01 00:30,A,3\n2014-01-01 00:10,A,2\n";
        let series = parse_station_csv(csv.as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(series[0].values, vec![Some(1.0), Some(2.0), None, Some(3.0)]);
    }

    #[test]
    fn sentinel_is_missing() {
        let csv = "timestamp,station,speed\n2014-01-01 00:00,A,-\n2014-01-01 00:10,A,2\n";
        let schema = ColumnSpec {
            missing_sentinel: Some("-".into()),
            ..ColumnSpec::default()
        };
        let series = parse_station_csv(csv.as_bytes(), &schema).unwrap();
        assert_eq!(series[0].values, vec![None, Some(2.0)]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "timestamp,station,speed\n2014-01-01 00:00,A,1\n2014-01-01 00:10,A,abc\n";
        match parse_station_csv(csv.as_bytes(), &ColumnSpec::default()) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let csv = "timestamp,station,speed\nyesterday,A,1\n";
        assert!(matches!(
            parse_station_csv(csv.as_bytes(), &ColumnSpec::default()),
            Err(IngestError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn off_grid_and_duplicates_fail() {
        let csv = "timestamp,station,speed\n2014-01-01 00:00,A,1\n2014-01-01 00:15,A,1\n";
        assert!(matches!(
            parse_station_csv(csv.as_bytes(), &ColumnSpec::default()),
            Err(IngestError::OffGrid { line: 3, .. })
        ));
        let csv = "timestamp,station,speed\n2014-01-01 00:00,A,1\n2014-01-01T00:00:00Z,A,2\n";
        assert!(matches!(
            parse_station_csv(csv.as_bytes(), &ColumnSpec::default()),
            Err(IngestError::Duplicate { line: 3, .. })
        ));
    }

    #[test]
    fn negative_value_rejected() {
        let csv = "timestamp,station,speed\n2014-01-01 00:00,A,-1\n";
        assert!(matches!(
            parse_station_csv(csv.as_bytes(), &ColumnSpec::default()),
            Err(IngestError::Parse { .. })
        ));
    }

    #[test]
    fn missing_column() {
        let csv = "time,station,speed\n";
        assert!(matches!(
            parse_station_csv(csv.as_bytes(), &ColumnSpec::default()),
            Err(IngestError::MissingColumn(c)) if c == "timestamp"
        ));
    }

    fn series(id: &str, start: DateTime<Utc>, n: usize) -> StationSeries {
        let values = (0..n).map(|i| Some(i as f64)).collect();
        StationSeries::new(id, TimeDelta::minutes(10), start, values).unwrap()
    }

    #[test]
    fn two_days_of_ten_minute_samples() {
        let s = series("A", Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap(), 288);
        let panels = window_panel(&[s], &WindowSpec::days(1)).unwrap();
        assert_eq!(panels.len(), 2);
        assert!(panels.iter().all(|p| p.columns[0].len() == 144));
        assert_eq!(panels[1].window_start, t("2014-01-02T00:00:00Z"));
        assert_eq!(panels[1].columns[0][0], Some(144.0));
    }

    #[test]
    fn partial_edge_days_dropped() {
        // starts 12:00 on day 1, ends 12:00 on day 4
        let s = series("A", t("2014-01-01T12:00:00Z"), 144 * 3);
        let panels = window_panel(&[s], &WindowSpec::days(1)).unwrap();
        assert_eq!(panels.len(), 2);
        assert_eq!(panels[0].window_start, t("2014-01-02T00:00:00Z"));
        assert_eq!(panels[0].columns[0][0], Some(72.0));
    }

    #[test]
    fn utc_offset_shifts_boundaries() {
        let s = series("A", t("2014-01-01T00:00:00Z"), 288);
        let w = WindowSpec::days(1).with_utc_offset(TimeDelta::hours(1));
        let panels = window_panel(&[s], &w).unwrap();
        // local midnight is 23:00 UTC
        assert_eq!(panels.len(), 1);
        assert_eq!(panels[0].window_start, t("2014-01-01T23:00:00Z"));
    }

    #[test]
    fn empty_input_gives_no_panels() {
        assert!(window_panel(&[], &WindowSpec::days(1)).unwrap().is_empty());
    }

    #[test]
    fn window_errors() {
        let a = series("A", t("2014-01-01T00:00:00Z"), 10);
        let mut b = series("B", t("2014-01-01T00:00:00Z"), 10);
        b.sample_interval = TimeDelta::minutes(30);
        assert!(matches!(
            window_panel(&[a.clone(), b], &WindowSpec::days(1)),
            Err(IngestError::Incompatible(_))
        ));
        assert!(matches!(
            window_panel(&[a.clone()], &WindowSpec::new(TimeDelta::minutes(5))),
            Err(IngestError::Parameter(_))
        ));
        assert!(matches!(
            window_panel(&[a], &WindowSpec::new(TimeDelta::minutes(25))),
            Err(IngestError::Parameter(_))
        ));
    }

    #[test]
    fn five_year_span_day_count() {
        // Oracle: calendar arithmetic on dates only.
        let days = (chrono::NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()
            - chrono::NaiveDate::from_ymd_opt(2012, 1, 1).unwrap())
        .num_days() as usize;
        assert_eq!(days, 1827);
        let s = StationSeries::new(
            "A",
            TimeDelta::hours(6),
            t("2012-01-01T00:00:00Z"),
            vec![Some(1.0); days * 4],
        )
        .unwrap();
        let panels = window_panel(&[s], &WindowSpec::days(1)).unwrap();
        assert_eq!(panels.len(), days);
    }

    #[test]
    fn misaligned_stations_join_with_padding() {
        let a = series("A", t("2014-01-01T00:00:00Z"), 288);
        let b = series("B", t("2014-01-02T00:00:00Z"), 144);
        let panels = window_panel(&[a, b], &WindowSpec::days(1)).unwrap();
        assert_eq!(panels.len(), 2);
        assert!(panels[0].columns[1].iter().all(Option::is_none));
        assert_eq!(panels[1].column("B").unwrap()[0], Some(0.0));
    }

    #[test]
    fn missingness_fractions() {
        let a = series("A", t("2014-01-01T00:00:00Z"), 144);
        let report = missing_report(&[a.clone()], &WindowSpec::days(1)).unwrap();
        assert_eq!(report.total_fraction, 0.0);
        assert_eq!(report.per_window_fraction, vec![0.0]);
        assert_eq!(report.per_station_fraction["A"], 0.0);

        let b = StationSeries::new("B", a.sample_interval, a.start, vec![None; 144]).unwrap();
        let report = missing_report(&[a, b], &WindowSpec::days(1)).unwrap();
        assert_eq!(report.total_fraction, 0.5);
        assert_eq!(report.per_station_fraction["B"], 1.0);
        assert_eq!(report.max_window_fraction(), 0.5);
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("10m").unwrap(), TimeDelta::minutes(10));
        assert_eq!(parse_duration("1d").unwrap(), TimeDelta::days(1));
        assert!(parse_duration("0d").is_err());
        assert!(parse_duration("5").is_err());
        assert!(parse_duration("5y").is_err());
    }
}
