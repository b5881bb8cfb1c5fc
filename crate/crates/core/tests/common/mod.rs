#![allow(dead_code)]

use std::fs::File;
use std::path::PathBuf;

use hybridcast::ingest::{aggregate_country, parse_jhu_csv, slice_for_interval, IntervalSpec};
use hybridcast::series::{train_test_split, SplitSpec};
use hybridcast::TimeSeries;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/confirmed_global_fixture.csv")
}

pub fn country(name: &str) -> TimeSeries {
    let table = parse_jhu_csv(File::open(fixture_path()).unwrap()).unwrap();
    aggregate_country(&table, name).unwrap()
}

/// Training and test parts for one of the three benchmark intervals.
pub fn split(name: &str, interval: usize) -> (TimeSeries, TimeSeries) {
    let iv = &IntervalSpec::benchmark_defaults()[interval];
    let s = slice_for_interval(&country(name), iv).unwrap();
    train_test_split(
        &s,
        SplitSpec {
            test_len: 10,
            interval_end: Some(iv.end),
        },
    )
    .unwrap()
}
