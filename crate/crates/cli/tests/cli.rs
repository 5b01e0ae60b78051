use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{DateTime, TimeDelta};
use windnet::distfit::Distribution;
use windnet::ingest::{write_station_csv, StationSeries};
use windnet::synthetic::SyntheticCorpus;

fn windnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windnet")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_series(dir: &Path, name: &str, series: &[StationSeries]) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    write_station_csv(series, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn synthetic(dir: &Path, stations: usize, days: usize) -> PathBuf {
    synthetic_at(dir, stations, days, 24)
}

fn synthetic_at(dir: &Path, stations: usize, days: usize, samples_per_day: usize) -> PathBuf {
    let corpus = SyntheticCorpus { stations, days, samples_per_day, ..SyntheticCorpus::default() };
    write_series(dir, "synthetic.csv", &corpus.generate())
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(text.ends_with('\n'), "{} lacks a trailing newline", path.display());
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {:?}", table[0]))
}

fn start() -> DateTime<chrono::Utc> {
    DateTime::from_timestamp(1_325_376_000, 0).unwrap()
}

#[test]
fn fit_writes_three_rows_per_station() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic(dir.path(), 3, 30);
    let out = dir.path().join("out");
    ok(&windnet(&["fit", "--input", input.to_str().unwrap(), "--sample-interval", "1h", "--out", out.to_str().unwrap()]));
    let fits = rows(&out.join("fits.csv"));
    assert_eq!(fits[0], ["station", "family", "rank", "param1", "param2", "param3", "loglik", "kld"]);
    assert_eq!(fits.len() - 1, 9);
    assert_eq!(rows(&out.join("kld_summary.csv")).len() - 1, 3);
}

#[test]
fn gev_corpus_ranks_gev_first() {
    let dir = tempfile::tempdir().unwrap();
    let series: Vec<StationSeries> = (0..3)
        .map(|i| {
            let d = Distribution::gev(5.0 + i as f64, 1.5, 0.2).unwrap();
            let n = 4000;
            let values = (0..n)
                .map(|k| {
                    // stratified probabilities in a station-specific order
                    let p = ((k * 7919 + i * 104_729) % n) as f64 / n as f64 + 0.5 / n as f64;
                    Some(d.quantile(p).unwrap())
                })
                .collect();
            StationSeries::new(format!("G{i}"), TimeDelta::minutes(10), start(), values).unwrap()
        })
        .collect();
    let input = write_series(dir.path(), "gev.csv", &series);
    let out = dir.path().join("out");
    ok(&windnet(&["fit", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let summary = rows(&out.join("kld_summary.csv"));
    assert_eq!(summary[1][column(&summary, "family")], "gev");
}

#[test]
fn unreadable_input_exits_2_and_names_path() {
    let out = windnet(&["fit", "--input", "/no/such/dir/wind.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/wind.csv"));

    let out = windnet(&["report", "--config", "/no/such/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stage_errors_exit_nonzero_with_stage_name() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "timestamp,station,speed\n2012-01-01T00:00:00Z,A,1\n2012-01-01T00:05:00Z,A,2\n").unwrap();
    let out = windnet(&["density", "--input", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest stage"));
}

fn toy_panel(dir: &Path, coherent: bool) -> PathBuf {
    let base: Vec<f64> = (0..96).map(|k| 5.0 + (k as f64 * 0.7).sin() * 2.0 + (k % 5) as f64 * 0.3).collect();
    let series: Vec<StationSeries> = (0..4)
        .map(|i| {
            let values = base
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let wobble = if coherent { 0.0 } else { ((k * (i + 3)) % 7) as f64 * 0.4 };
                    Some((1.0 + 0.5 * i as f64) * b + 1.0 + wobble)
                })
                .collect();
            StationSeries::new(format!("T{i}"), TimeDelta::minutes(30), start(), values).unwrap()
        })
        .collect();
    write_series(dir, "toy.csv", &series)
}

#[test]
fn two_windows_give_two_density_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_panel(dir.path(), false);
    let out = dir.path().join("out");
    ok(&windnet(&[
        "density",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "30m",
        "--min-overlap",
        "10",
        "--rules",
        "pos:0.2,pos:0.7",
        "--out",
        out.to_str().unwrap(),
    ]));
    let lo = rows(&out.join("density_pos_0.2.csv"));
    let hi = rows(&out.join("density_pos_0.7.csv"));
    assert_eq!(lo.len() - 1, 2);
    assert_eq!(lo[0], ["window_start", "rule", "density", "valid_pairs"]);
    for (a, b) in lo[1..].iter().zip(&hi[1..]) {
        assert!(b[2].parse::<f64>().unwrap() <= a[2].parse::<f64>().unwrap());
    }
    roxmltree::Document::parse(&fs::read_to_string(out.join("density.svg")).unwrap()).unwrap();
}

#[test]
fn coherent_stations_are_fully_connected() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_panel(dir.path(), true);
    let out = dir.path().join("out");
    ok(&windnet(&[
        "density",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "30m",
        "--min-overlap",
        "10",
        "--rules",
        "abs:0.1",
        "--out",
        out.to_str().unwrap(),
    ]));
    let d = rows(&out.join("density_abs_0.1.csv"));
    assert!(d[1..].iter().all(|r| r[2] == "1"), "{d:?}");
}

#[test]
fn periodogram_outputs_bands_peaks_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic(dir.path(), 5, 3 * 365);
    let out = dir.path().join("out");
    ok(&windnet(&[
        "periodogram",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "1h",
        "--min-overlap",
        "12",
        "--rules",
        "pos:0.2,band:0.3:0.4,band:0.4:0.5",
        "--out",
        out.to_str().unwrap(),
    ]));
    for stem in ["pos_0.2", "band_0.3_0.4", "band_0.4_0.5"] {
        let p = rows(&out.join(format!("periodogram_{stem}.csv")));
        assert_eq!(p[0], ["frequency", "period_days", "power", "estimator", "L", "method"]);
    }
    let peaks = rows(&out.join("peaks.csv"));
    let period = column(&peaks, "period_days");
    let robust = peaks.iter().find(|r| r[0] == "pos:0.2" && r[1] == "robust").unwrap();
    let days: f64 = robust[period].parse().unwrap();
    assert!((days - 365.0).abs() < 40.0, "{days}");
    assert!(!peaks[0].iter().any(|h| h.starts_with("surrogate")));

    let svg = fs::read_to_string(out.join("periodogram.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc.descendants().any(|n| n.text() == Some("365.25 d")));
}

#[test]
fn surrogate_flag_adds_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic_at(dir.path(), 8, 800, 48);
    let out = dir.path().join("out");
    ok(&windnet(&[
        "periodogram",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "30m",
        "--min-overlap",
        "12",
        "--rules",
        "pos:0.2",
        "--surrogate",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]));
    let peaks = rows(&out.join("peaks.csv"));
    let real = column(&peaks, "annual_peak_ratio");
    let surr = column(&peaks, "surrogate_annual_peak_ratio");
    let robust = &peaks[1];
    assert_eq!(robust[1], "robust");
    assert!(robust[surr].parse::<f64>().unwrap() < robust[real].parse::<f64>().unwrap());
    assert!(out.join("surrogate_density_pos_0.2.csv").is_file());
    assert_eq!(rows(&out.join("connected_range.csv")).len(), 3);
}

#[test]
fn short_series_reports_minimum_length() {
    let dir = tempfile::tempdir().unwrap();
    let input = synthetic(dir.path(), 3, 20);
    let out = windnet(&[
        "periodogram",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "1h",
        "--min-overlap",
        "12",
        "--lag-max",
        "50",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 53 points"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_panel(dir.path(), false);
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!(
            "# toy\ninput = {}\nsample_interval = 30m\nmin_overlap = 10\nrules = pos:0.9\nout = {}\n",
            input.display(),
            dir.path().join("from_config").display()
        ),
    )
    .unwrap();
    let out = dir.path().join("from_flag");
    ok(&windnet(&["density", "--config", conf.to_str().unwrap(), "--rules", "neg:-0.3", "--out", out.to_str().unwrap()]));
    assert!(out.join("density_neg_-0.3.csv").is_file());
    assert!(!out.join("density_pos_0.9.csv").exists());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn snapshot_writes_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_panel(dir.path(), true);
    let out = dir.path().join("out");
    ok(&windnet(&[
        "density",
        "--input",
        input.to_str().unwrap(),
        "--sample-interval",
        "30m",
        "--min-overlap",
        "10",
        "--rules",
        "pos:0.5",
        "--snapshot",
        "2012-01-02T06:00:00Z",
        "--out",
        out.to_str().unwrap(),
    ]));
    let edges = rows(&out.join("edges_pos_0.5_20120102T0000.csv"));
    assert_eq!(edges[0], ["station_a", "station_b", "rho"]);
    assert_eq!(edges.len() - 1, 6);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_panel(dir.path(), false);
    let args = ["density", "--input", input.to_str().unwrap(), "--sample-interval", "30m", "--min-overlap", "10"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_windnet"))
            .args(args)
            .arg("--out")
            .arg(dir.path().join(threads))
            .env("WINDNET_THREADS", threads)
            .output()
            .unwrap()
    };
    ok(&run("1"));
    assert!(!run("zero").status.success());
}
