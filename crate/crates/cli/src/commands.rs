//! Pipeline stages behind each subcommand.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Datelike, Utc};
use rayon::prelude::*;
use windnet::corrnet::{self, DensitySeries};
use windnet::distfit::{self, Distribution, DistributionFamily};
use windnet::ingest::{self, StationSeries};
use windnet::pipeline::{self, PipelineOptions, RulePeriodicity, ANNUAL_BAND};
use windnet::spectral::{self, Estimator, Periodogram, YEAR_DAYS};
use windnet::surrogate::{self, SurrogateOutcome, SurrogateSpec};
use windnet::synthetic::SyntheticCorpus;

use crate::config::PipelineConfig;
use crate::output::{num, write_atomic, write_csv, write_with, Written};
use crate::svg::LinePlot;
use crate::InputError;

pub fn options(cfg: &PipelineConfig) -> PipelineOptions {
    PipelineOptions {
        min_overlap: cfg.min_overlap,
        max_lag: cfg.max_lag,
        method: cfg.method,
        ..PipelineOptions::default()
    }
}

pub fn load_series(cfg: &PipelineConfig) -> Result<Vec<StationSeries>> {
    let mut all = Vec::new();
    let mut seen = BTreeSet::new();
    for path in &cfg.inputs {
        let file = File::open(path).map_err(|e| InputError::new(path, e))?;
        let series = ingest::parse_station_csv(file, &cfg.columns)
            .with_context(|| format!("ingest stage, {}", path.display()))?;
        for s in series {
            if !seen.insert(s.station_id.clone()) {
                bail!("ingest stage, {}: station '{}' appears in more than one input", path.display(), s.station_id);
            }
            all.push(s);
        }
    }
    if all.is_empty() {
        bail!("ingest stage: inputs contain no stations");
    }
    all.sort_by(|a, b| a.station_id.cmp(&b.station_id));
    log::info!("loaded {} stations", all.len());
    Ok(all)
}

fn params3(d: &Distribution) -> [String; 3] {
    let p = d.params();
    [0, 1, 2].map(|i| p.get(i).map(|v| num(*v)).unwrap_or_default())
}

/// Ranks the three families per station by KLD on its positive samples.
pub fn stage_fit(cfg: &PipelineConfig, series: &[StationSeries]) -> Result<Written> {
    let rankings = series
        .par_iter()
        .map(|s| {
            let sample: Vec<f64> = s.present().into_iter().filter(|v| *v > 0.0).collect();
            let m = cfg.vasicek_m.unwrap_or_else(|| distfit::default_window(sample.len()));
            let ranking = distfit::rank_families(&sample, m)
                .with_context(|| format!("fit stage, station {}", s.station_id))?;
            if let Some((family, err)) = ranking.failures.first() {
                bail!("fit stage, station {}: {family} failed: {err}", s.station_id);
            }
            Ok((s.station_id.as_str(), ranking))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut written = Written::default();
    let path = cfg.out.join("fits.csv");
    write_csv(&path, |w| {
        w.write_record(["station", "family", "rank", "param1", "param2", "param3", "loglik", "kld"])?;
        for (id, ranking) in &rankings {
            for (rank, r) in ranking.ranked.iter().enumerate() {
                let [p1, p2, p3] = params3(&r.fit.distribution);
                w.write_record([
                    id.to_string(),
                    r.fit.family().to_string(),
                    (rank + 1).to_string(),
                    p1,
                    p2,
                    p3,
                    num(r.fit.log_likelihood),
                    num(r.score.divergence),
                ])?;
            }
        }
        Ok(())
    })?;
    written.push(path);

    let mut summary: Vec<(DistributionFamily, f64, usize)> = DistributionFamily::ALL
        .iter()
        .map(|&family| {
            let scores: Vec<f64> = rankings
                .iter()
                .flat_map(|(_, r)| r.ranked.iter().filter(|f| f.score.family == family).map(|f| f.score.divergence))
                .collect();
            let best = rankings.iter().filter(|(_, r)| r.best() == Some(family)).count();
            (family, scores.iter().sum::<f64>() / scores.len() as f64, best)
        })
        .collect();
    summary.sort_by(|a, b| a.1.total_cmp(&b.1));
    let path = cfg.out.join("kld_summary.csv");
    write_csv(&path, |w| {
        w.write_record(["rank", "family", "mean_kld", "stations_best"])?;
        for (rank, (family, mean, best)) in summary.iter().enumerate() {
            w.write_record([(rank + 1).to_string(), family.to_string(), num(*mean), best.to_string()])?;
        }
        Ok(())
    })?;
    written.push(path);
    Ok(written)
}

fn date_ticks(starts: &[DateTime<Utc>]) -> Vec<(f64, String)> {
    let Some(first) = starts.first() else { return Vec::new() };
    let mut ticks: Vec<(f64, String)> = starts
        .iter()
        .filter(|t| t.ordinal() == 1 && t.timestamp() % 86_400 == 0)
        .map(|t| ((*t - *first).num_seconds() as f64 / 86_400.0, t.format("%Y-%m-%d").to_string()))
        .collect();
    if ticks.len() < 2 {
        let last = starts[starts.len() - 1];
        ticks = vec![
            (0.0, first.format("%Y-%m-%d").to_string()),
            ((last - *first).num_seconds() as f64 / 86_400.0, last.format("%Y-%m-%d").to_string()),
        ];
    }
    ticks
}

fn density_plot(title: &str, series: &[DensitySeries]) -> LinePlot {
    let starts = series.first().map(|d| d.window_starts.clone()).unwrap_or_default();
    let first = starts.first().copied();
    LinePlot {
        title: title.into(),
        x_label: "date".into(),
        y_label: "connectivity density".into(),
        series: series
            .iter()
            .map(|d| {
                let pts = d
                    .window_starts
                    .iter()
                    .zip(&d.densities)
                    .map(|(t, v)| {
                        let x = (*t - first.expect("nonempty")).num_seconds() as f64 / 86_400.0;
                        (x, v.unwrap_or(f64::NAN))
                    })
                    .collect();
                (d.rule.to_string(), pts)
            })
            .collect(),
        x_ticks: date_ticks(&starts),
        ..LinePlot::default()
    }
}

fn write_densities(out: &Path, prefix: &str, series: &[DensitySeries], title: &str) -> Result<Written> {
    let mut written = Written::default();
    for d in series {
        let path = out.join(format!("{prefix}density_{}.csv", d.rule.file_stem()));
        write_with(&path, |buf| corrnet::write_density_csv(d, buf))?;
        written.push(path);
    }
    let path = out.join(format!("{prefix}density.svg"));
    write_atomic(&path, density_plot(title, series).render().as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Windows the corpus and writes density series, missingness and snapshots.
pub fn stage_density(cfg: &PipelineConfig, series: &[StationSeries]) -> Result<(Written, Vec<DensitySeries>)> {
    let panels = ingest::window_panel(series, &cfg.window).context("window stage")?;
    if panels.is_empty() {
        bail!("window stage: the data span no complete {} window", cfg.window.length);
    }
    let densities =
        corrnet::density_series_multi(&panels, &cfg.rules, cfg.min_overlap).context("density stage")?;
    let mut written = write_densities(&cfg.out, "", &densities, "Connectivity density")?;

    let report = ingest::missing_report(series, &cfg.window).context("window stage")?;
    let meta = match &cfg.stations {
        Some(p) => {
            let f = File::open(p).map_err(|e| InputError::new(p, e))?;
            ingest::parse_station_metadata(f).with_context(|| format!("ingest stage, {}", p.display()))?
        }
        None => Vec::new(),
    };
    let path = cfg.out.join("stations.csv");
    write_csv(&path, |w| {
        w.write_record(["station", "start", "samples", "missing_fraction", "lat", "lon", "alt"])?;
        for s in series {
            let m = meta.iter().find(|m| m.station == s.station_id);
            let field = |f: fn(&ingest::StationMeta) -> &String| m.map(|m| f(m).clone()).unwrap_or_default();
            w.write_record([
                s.station_id.clone(),
                ingest::format_timestamp(s.start),
                s.len().to_string(),
                num(report.per_station_fraction[&s.station_id]),
                field(|m| &m.lat),
                field(|m| &m.lon),
                field(|m| &m.alt),
            ])?;
        }
        Ok(())
    })?;
    written.push(path);

    let path = cfg.out.join("missing.csv");
    write_csv(&path, |w| {
        w.write_record(["window_start", "missing_fraction"])?;
        for (t, f) in report.window_starts.iter().zip(&report.per_window_fraction) {
            w.write_record([ingest::format_timestamp(*t), num(*f)])?;
        }
        Ok(())
    })?;
    written.push(path);

    if let Some(t) = cfg.snapshot {
        let panel = panels
            .iter()
            .find(|p| p.window_start <= t && t < p.window_start + p.window_length)
            .ok_or_else(|| anyhow!("snapshot stage: no window contains {}", ingest::format_timestamp(t)))?;
        let matrix = corrnet::correlation_matrix(panel, cfg.min_overlap).context("snapshot stage")?;
        for rule in &cfg.rules {
            let graph = corrnet::apply_rule(&matrix, rule);
            let path = cfg.out.join(format!(
                "edges_{}_{}.csv",
                rule.file_stem(),
                panel.window_start.format("%Y%m%dT%H%M")
            ));
            write_with(&path, |buf| corrnet::write_edge_list_csv(&matrix, &graph, buf))?;
            written.push(path);
        }
    }
    Ok((written, densities))
}

pub fn analyse(cfg: &PipelineConfig, densities: &[DensitySeries]) -> Result<Vec<RulePeriodicity>> {
    let opts = options(cfg);
    densities
        .par_iter()
        .map(|d| {
            pipeline::analyse_density(d.clone(), cfg.window.length, &opts)
                .with_context(|| format!("periodogram stage, rule {}", d.rule))
        })
        .collect()
}

fn estimator_fields(e: &Estimator) -> [String; 2] {
    match e {
        Estimator::Robust { max_lag, method } => [max_lag.to_string(), method.to_string()],
        _ => [String::new(), String::new()],
    }
}

fn periodogram_rows(w: &mut csv::Writer<Vec<u8>>, p: &Periodogram) -> Result<()> {
    let [l, method] = estimator_fields(&p.estimator);
    for (i, (f, v)) in p.frequencies.iter().zip(&p.powers).enumerate() {
        w.write_record([num(*f), num(p.period_days(i)), num(*v), p.estimator.to_string(), l.clone(), method.clone()])?;
    }
    Ok(())
}

struct PeakRow {
    bin: usize,
    frequency: f64,
    period_days: f64,
    power: f64,
    annual_period_days: f64,
    annual_power: f64,
    annual_peak_ratio: f64,
}

fn peak_row(p: &Periodogram) -> Result<PeakRow> {
    let peak = spectral::peak_period(p, None)?;
    let annual = spectral::peak_period(p, Some(ANNUAL_BAND))?;
    Ok(PeakRow {
        bin: peak.bin,
        frequency: peak.peak_frequency,
        period_days: peak.peak_period_days,
        power: peak.peak_power,
        annual_period_days: annual.peak_period_days,
        annual_power: annual.peak_power,
        annual_peak_ratio: spectral::peak_ratio(p, ANNUAL_BAND)?,
    })
}

fn periodogram_plot(title: &str, results: &[RulePeriodicity]) -> LinePlot {
    LinePlot {
        title: title.into(),
        x_label: "period (days, log scale)".into(),
        y_label: "robust power".into(),
        series: results
            .iter()
            .map(|r| {
                let pts = (1..r.robust.powers.len()).map(|l| (r.robust.period_days(l), r.robust.powers[l])).collect();
                (r.rule.to_string(), pts)
            })
            .collect(),
        marker: Some((YEAR_DAYS, "365.25 d".into())),
        log_x: true,
        ..LinePlot::default()
    }
}

/// Periodogram CSVs, the peak table and plot. Surrogate columns are added
/// when an outcome is supplied.
pub fn stage_periodogram(
    cfg: &PipelineConfig,
    results: &[RulePeriodicity],
    surrogate: Option<&SurrogateOutcome>,
) -> Result<Written> {
    let mut written = Written::default();
    for r in results {
        let path = cfg.out.join(format!("periodogram_{}.csv", r.rule.file_stem()));
        write_csv(&path, |w| {
            w.write_record(["frequency", "period_days", "power", "estimator", "L", "method"])?;
            periodogram_rows(w, &r.robust)?;
            periodogram_rows(w, &r.classical)
        })?;
        written.push(path);
    }

    let path = cfg.out.join("peaks.csv");
    write_csv(&path, |w| {
        let mut header = vec![
            "rule",
            "estimator",
            "bin",
            "frequency",
            "period_days",
            "power",
            "annual_period_days",
            "annual_power",
            "annual_peak_ratio",
            "mean_density",
        ];
        if surrogate.is_some() {
            header.extend(["surrogate_period_days", "surrogate_annual_power", "surrogate_annual_peak_ratio"]);
        }
        w.write_record(&header)?;
        for r in results {
            let twin = surrogate.and_then(|s| s.periodicity.iter().find(|p| p.rule == r.rule));
            for (which, p) in [("robust", &r.robust), ("classical", &r.classical)] {
                let row = peak_row(p).with_context(|| format!("periodogram stage, rule {}", r.rule))?;
                let mut rec = vec![
                    r.rule.to_string(),
                    which.to_string(),
                    row.bin.to_string(),
                    num(row.frequency),
                    num(row.period_days),
                    num(row.power),
                    num(row.annual_period_days),
                    num(row.annual_power),
                    num(row.annual_peak_ratio),
                    r.mean_density().map(num).unwrap_or_default(),
                ];
                if surrogate.is_some() {
                    let t = twin.ok_or_else(|| anyhow!("surrogate stage: no result for rule {}", r.rule))?;
                    let sp = if which == "robust" { &t.robust } else { &t.classical };
                    let srow = peak_row(sp).with_context(|| format!("surrogate stage, rule {}", r.rule))?;
                    rec.extend([num(srow.period_days), num(srow.annual_power), num(srow.annual_peak_ratio)]);
                }
                w.write_record(&rec)?;
            }
        }
        Ok(())
    })?;
    written.push(path);

    let path = cfg.out.join("periodogram.svg");
    write_atomic(&path, periodogram_plot("Robust periodogram of connectivity density", results).render().as_bytes())?;
    written.push(path);
    Ok(written)
}

/// GEV surrogate experiment with a real-versus-surrogate comparison table.
pub fn stage_surrogate(
    cfg: &PipelineConfig,
    series: &[StationSeries],
    real: &[RulePeriodicity],
) -> Result<(Written, SurrogateOutcome)> {
    let spec = SurrogateSpec::from_series(series, cfg.rules.clone(), cfg.seed).context("surrogate stage, GEV fits")?;
    let outcome = surrogate::surrogate_experiment(&spec, &cfg.window, &options(cfg)).context("surrogate stage")?;
    let mut written = write_densities(&cfg.out, "surrogate_", &outcome.density_series, "Surrogate connectivity density")?;

    let path = cfg.out.join("surrogate_fits.csv");
    write_csv(&path, |w| {
        w.write_record(["station", "location", "scale", "shape", "loglik"])?;
        for (id, f) in &spec.fits {
            let [a, b, c] = params3(&f.distribution);
            w.write_record([id.clone(), a, b, c, num(f.log_likelihood)])?;
        }
        Ok(())
    })?;
    written.push(path);

    let path = cfg.out.join("surrogate_peaks.csv");
    write_csv(&path, |w| {
        w.write_record([
            "rule",
            "real_mean_density",
            "surrogate_mean_density",
            "real_annual_peak_ratio",
            "surrogate_annual_peak_ratio",
        ])?;
        for r in real {
            let s = outcome.periodicity.iter().find(|p| p.rule == r.rule);
            w.write_record([
                r.rule.to_string(),
                r.mean_density().map(num).unwrap_or_default(),
                s.and_then(RulePeriodicity::mean_density).map(num).unwrap_or_default(),
                num(r.annual_peak_ratio),
                s.map(|p| num(p.annual_peak_ratio)).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })?;
    written.push(path);

    let path = cfg.out.join("connected_range.csv");
    write_csv(&path, |w| {
        w.write_record(["source", "lo", "hi"])?;
        for (source, range) in [("real", surrogate::connected_range(real)), ("surrogate", outcome.connected_range)] {
            let (lo, hi) = range.map(|(a, b)| (num(a), num(b))).unwrap_or_default();
            w.write_record([source.to_string(), lo, hi])?;
        }
        Ok(())
    })?;
    written.push(path);
    Ok((written, outcome))
}

pub fn cmd_fit(cfg: &PipelineConfig) -> Result<Written> {
    stage_fit(cfg, &load_series(cfg)?)
}

pub fn cmd_density(cfg: &PipelineConfig) -> Result<Written> {
    Ok(stage_density(cfg, &load_series(cfg)?)?.0)
}

pub fn cmd_periodogram(cfg: &PipelineConfig) -> Result<Written> {
    let series = load_series(cfg)?;
    let (mut written, densities) = stage_density(cfg, &series)?;
    let results = analyse(cfg, &densities)?;
    let outcome = if cfg.surrogate {
        let (w, o) = stage_surrogate(cfg, &series, &results)?;
        written.extend(w);
        Some(o)
    } else {
        None
    };
    written.extend(stage_periodogram(cfg, &results, outcome.as_ref())?);
    Ok(written)
}

pub fn cmd_surrogate(cfg: &PipelineConfig) -> Result<Written> {
    let series = load_series(cfg)?;
    let (mut written, densities) = stage_density(cfg, &series)?;
    let results = analyse(cfg, &densities)?;
    written.extend(stage_surrogate(cfg, &series, &results)?.0);
    Ok(written)
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<Written> {
    let series = load_series(cfg)?;
    let mut written = stage_fit(cfg, &series)?;
    let (w, densities) = stage_density(cfg, &series)?;
    written.extend(w);
    let results = analyse(cfg, &densities)?;
    let outcome = if cfg.surrogate {
        let (w, o) = stage_surrogate(cfg, &series, &results)?;
        written.extend(w);
        Some(o)
    } else {
        None
    };
    written.extend(stage_periodogram(cfg, &results, outcome.as_ref())?);
    Ok(written)
}

pub fn cmd_synth(corpus: &SyntheticCorpus, out: &Path) -> Result<Written> {
    let series = corpus.generate();
    let path = out.join("synthetic.csv");
    write_with(&path, |buf| ingest::write_station_csv(&series, buf))?;
    Ok(Written(vec![path]))
}
