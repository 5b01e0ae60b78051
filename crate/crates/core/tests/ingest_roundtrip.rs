use chrono::{DateTime, TimeDelta};
use proptest::prelude::*;
use windnet::ingest::{parse_station_csv, window_panel, write_station_csv, ColumnSpec, StationSeries, WindowSpec};

fn series_strategy() -> impl Strategy<Value = Vec<StationSeries>> {
    (1usize..4, 1usize..200, 0i64..144).prop_flat_map(|(stations, len, phase)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.9, 0.0f64..40.0), len), stations)
            .prop_map(move |cols| {
                let start = DateTime::from_timestamp(1_325_376_000 + phase * 600, 0).unwrap();
                cols.into_iter()
                    .enumerate()
                    .map(|(i, mut v)| {
                        v[0] = Some(1.0);
                        StationSeries::new(format!("S{i}"), TimeDelta::minutes(10), start, v).unwrap()
                    })
                    .collect()
            })
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(series in series_strategy()) {
        let mut buf = Vec::new();
        write_station_csv(&series, &mut buf).unwrap();
        let back = parse_station_csv(buf.as_slice(), &ColumnSpec::default()).unwrap();
        let trimmed: Vec<StationSeries> = series
            .iter()
            .map(|s| {
                let keep = s.values.iter().rposition(Option::is_some).map_or(0, |p| p + 1);
                StationSeries { values: s.values[..keep].to_vec(), ..s.clone() }
            })
            .collect();
        for (a, b) in trimmed.iter().zip(&back) {
            prop_assert_eq!(&a.station_id, &b.station_id);
            prop_assert_eq!(a.start, b.start);
            prop_assert_eq!(a.values.len(), b.values.len().min(a.values.len()));
            prop_assert_eq!(&a.values[..], &b.values[..a.values.len()]);
            prop_assert!(b.values[a.values.len()..].iter().all(Option::is_none));
        }
    }

    #[test]
    fn windows_tile_without_overlap(series in series_strategy(), hours in 1i64..6) {
        let spec = WindowSpec::new(TimeDelta::hours(hours));
        let panels = window_panel(&series, &spec).unwrap();
        for w in panels.windows(2) {
            prop_assert_eq!(w[1].window_start - w[0].window_start, spec.length);
        }
        for p in &panels {
            prop_assert_eq!(p.samples_per_window() as i64, hours * 6);
            prop_assert_eq!(p.window_start.timestamp() % (hours * 3600), 0);
            for s in &series {
                let col = p.column(&s.station_id).unwrap();
                for (k, v) in col.iter().enumerate() {
                    let t = p.window_start + s.sample_interval * k as i32;
                    let j = (t - s.start).num_seconds() / 600;
                    let expected = if j >= 0 { s.values.get(j as usize).copied().flatten() } else { None };
                    prop_assert_eq!(*v, expected);
                }
            }
        }
    }
}
