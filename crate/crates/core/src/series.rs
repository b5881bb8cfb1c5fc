//! Daily series type and the transforms shared by every model:
//! differencing, scaling and train/test splitting.

use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, gap-free daily series.
///
/// Dates are implied by `start` and the position of each value, so the
/// strictly-increasing one-day step is a structural guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    start: NaiveDate,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData(
                "a series needs at least one observation".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            start,
            values,
        })
    }

    /// Builds a series from explicit `(date, value)` pairs, rejecting gaps and
    /// out-of-order dates.
    pub fn from_dated(name: impl Into<String>, points: &[(NaiveDate, f64)]) -> Result<Self> {
        let (first, _) = *points.first().ok_or(Error::EmptyInput)?;
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 - w[0].0 != Duration::days(1) {
                return Err(Error::Format(format!(
                    "dates must advance by exactly one day: {} -> {} at row {}",
                    w[0].0,
                    w[1].0,
                    i + 1
                )));
            }
        }
        Self::new(name, first, points.iter().map(|p| p.1).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(|i| self.date_at(i))
    }

    /// Index of `date`, if it falls inside the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    /// Contiguous sub-series `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.values.len() {
            return Err(Error::InsufficientData(format!(
                "cannot slice [{from}, {to}) from a series of length {}",
                self.values.len()
            )));
        }
        Self::new(
            self.name.clone(),
            self.date_at(from),
            self.values[from..to].to_vec(),
        )
    }

    pub fn with_values(&self, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), start, values)
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Reads the canonical `date,value` CSV.
    pub fn read_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "value" {
            return Err(Error::Format(format!(
                "expected header `date,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|_| {
                Error::Cell {
                    row: row + 1,
                    column: 0,
                    value: record[0].to_string(),
                }
            })?;
            let value: f64 = record[1].trim().parse().map_err(|_| Error::Cell {
                row: row + 1,
                column: 1,
                value: record[1].to_string(),
            })?;
            points.push((date, value));
        }
        Self::from_dated(name, &points)
    }

    /// Writes the canonical `date,value` CSV with shortest round-trip reals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(["date", "value"])?;
        for (date, value) in self.dates().zip(&self.values) {
            wtr.write_record([date.format("%Y-%m-%d").to_string(), value.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Seeds recorded by [`difference`] so that [`inverse_difference`] can
/// rebuild the original values exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffState {
    pub order: usize,
    /// First value of the input to each differencing pass, in application order.
    pub seeds: Vec<f64>,
}

/// Applies first differencing `d` times.
pub fn difference_values(values: &[f64], d: usize) -> Result<(Vec<f64>, DiffState)> {
    if values.len() <= d && d > 0 {
        return Err(Error::InsufficientData(format!(
            "differencing of order {d} needs more than {d} values, got {}",
            values.len()
        )));
    }
    let mut current = values.to_vec();
    let mut seeds = Vec::with_capacity(d);
    for _ in 0..d {
        seeds.push(current[0]);
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok((current, DiffState { order: d, seeds }))
}

/// Undoes [`difference_values`] by cumulative summation from the recorded seeds.
pub fn inverse_difference_values(diff: &[f64], state: &DiffState) -> Result<Vec<f64>> {
    if state.seeds.len() != state.order {
        return Err(Error::StateMismatch(format!(
            "order {} requires {} seeds, found {}",
            state.order,
            state.order,
            state.seeds.len()
        )));
    }
    let mut current = diff.to_vec();
    for &seed in state.seeds.iter().rev() {
        let mut out = Vec::with_capacity(current.len() + 1);
        let mut acc = seed;
        out.push(acc);
        for v in &current {
            acc += v;
            out.push(acc);
        }
        current = out;
    }
    Ok(current)
}

/// Differenced series is dated from the first observation it can be computed for.
pub fn difference(series: &TimeSeries, d: usize) -> Result<(TimeSeries, DiffState)> {
    if series.len() <= d {
        return Err(Error::InsufficientData(format!(
            "differencing of order {d} needs more than {d} values, got {}",
            series.len()
        )));
    }
    let (values, state) = difference_values(series.values(), d)?;
    Ok((series.with_values(series.date_at(d), values)?, state))
}

pub fn inverse_difference(diff: &TimeSeries, state: &DiffState) -> Result<TimeSeries> {
    let values = inverse_difference_values(diff.values(), state)?;
    let start = diff.start() - Duration::days(state.order as i64);
    diff.with_values(start, values)
}

/// Min-max bounds computed on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleState {
    pub min: f64,
    pub max: f64,
}

impl ScaleState {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(Error::DegenerateScale(min));
        }
        Ok(Self { min, max })
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn unscale(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Sign-preserving scaling of `[-max_abs, max_abs]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricScale {
    pub max_abs: f64,
}

impl SymmetricScale {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_abs == 0.0 || !max_abs.is_finite() {
            return Err(Error::DegenerateScale(max_abs));
        }
        Ok(Self { max_abs })
    }

    pub fn scale(&self, v: f64) -> f64 {
        v / self.max_abs
    }

    pub fn unscale(&self, v: f64) -> f64 {
        v * self.max_abs
    }
}

pub fn minmax_scale(series: &TimeSeries) -> Result<(TimeSeries, ScaleState)> {
    let state = ScaleState::fit(series.values())?;
    let scaled = series.values().iter().map(|&v| state.scale(v)).collect();
    Ok((series.with_values(series.start(), scaled)?, state))
}

pub fn inverse_scale(series: &TimeSeries, state: ScaleState) -> Result<TimeSeries> {
    let values = series.values().iter().map(|&v| state.unscale(v)).collect();
    series.with_values(series.start(), values)
}

/// How many trailing points form the test set, optionally anchored at a date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_len: usize,
    /// Last test day; `None` means the last observation.
    pub interval_end: Option<NaiveDate>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_len: 10,
            interval_end: None,
        }
    }
}

/// Returns `(train, test)` where `test` holds the final `test_len` points
/// ending at `interval_end`.
pub fn train_test_split(series: &TimeSeries, spec: SplitSpec) -> Result<(TimeSeries, TimeSeries)> {
    if spec.test_len == 0 {
        return Err(Error::InsufficientData("test_len must be at least 1".into()));
    }
    let end_idx = match spec.interval_end {
        Some(date) => series.index_of(date).ok_or(Error::OutOfRange {
            date,
            first: series.start(),
            last: series.end(),
        })?,
        None => series.len() - 1,
    };
    let usable = end_idx + 1;
    if usable <= spec.test_len {
        return Err(Error::InsufficientData(format!(
            "{} points cannot hold a {}-point test set and a non-empty training set",
            usable, spec.test_len
        )));
    }
    let cut = usable - spec.test_len;
    Ok((series.slice(0, cut)?, series.slice(cut, usable)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, m, d).unwrap()
    }

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new("x", day(3, 1), values.to_vec()).unwrap()
    }

    #[test]
    fn difference_examples() {
        let s = ts(&[1.0, 3.0, 6.0, 10.0]);
        let (d1, st1) = difference(&s, 1).unwrap();
        assert_eq!(d1.values(), &[2.0, 3.0, 4.0]);
        assert_eq!(st1.seeds, vec![1.0]);
        assert_eq!(d1.start(), day(3, 2));
        let (d2, st2) = difference(&s, 2).unwrap();
        assert_eq!(d2.values(), &[1.0, 1.0]);
        assert_eq!(st2.seeds, vec![1.0, 2.0]);
        let (d0, st0) = difference(&s, 0).unwrap();
        assert_eq!(d0, s);
        assert!(st0.seeds.is_empty());
    }

    #[test]
    fn difference_too_short() {
        let s = ts(&[1.0, 2.0]);
        assert!(matches!(difference(&s, 2), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn inverse_difference_examples() {
        let state = DiffState {
            order: 1,
            seeds: vec![1.0],
        };
        assert_eq!(
            inverse_difference_values(&[2.0, 3.0, 4.0], &state).unwrap(),
            vec![1.0, 3.0, 6.0, 10.0]
        );
        let (_, st2) = difference_values(&[1.0, 3.0, 6.0, 10.0], 2).unwrap();
        assert_eq!(
            inverse_difference_values(&[1.0, 1.0], &st2).unwrap(),
            vec![1.0, 3.0, 6.0, 10.0]
        );
        let empty = DiffState {
            order: 0,
            seeds: vec![],
        };
        assert!(inverse_difference_values(&[], &empty).unwrap().is_empty());
    }

    #[test]
    fn inverse_difference_rejects_bad_state() {
        let state = DiffState {
            order: 2,
            seeds: vec![1.0],
        };
        assert!(matches!(
            inverse_difference_values(&[1.0], &state),
            Err(Error::StateMismatch(_))
        ));
    }

    #[test]
    fn inverse_difference_restores_dates() {
        let s = ts(&[4.0, 9.0, 1.0, 7.0, 7.0]);
        let (d, st) = difference(&s, 2).unwrap();
        assert_eq!(inverse_difference(&d, &st).unwrap(), s);
    }

    #[test]
    fn split_examples() {
        let s = ts(&(0..100).map(f64::from).collect::<Vec<_>>());
        let (train, test) = train_test_split(&s, SplitSpec::default()).unwrap();
        assert_eq!((train.len(), test.len()), (90, 10));
        assert_eq!(train.end() + Duration::days(1), test.start());

        let s11 = ts(&[1.0; 11]);
        let (train, test) = train_test_split(&s11, SplitSpec::default()).unwrap();
        assert_eq!((train.len(), test.len()), (1, 10));

        let s10 = ts(&[1.0; 10]);
        assert!(matches!(
            train_test_split(&s10, SplitSpec::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn split_anchored_at_interval_end() {
        let s = ts(&(0..40).map(f64::from).collect::<Vec<_>>());
        let end = s.date_at(29);
        let (train, test) = train_test_split(
            &s,
            SplitSpec {
                test_len: 10,
                interval_end: Some(end),
            },
        )
        .unwrap();
        assert_eq!(test.end(), end);
        assert_eq!(train.len(), 20);
        let beyond = s.end() + Duration::days(1);
        assert!(matches!(
            train_test_split(
                &s,
                SplitSpec {
                    test_len: 10,
                    interval_end: Some(beyond)
                }
            ),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn minmax_examples() {
        let (scaled, state) = minmax_scale(&ts(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(scaled.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(state, ScaleState { min: 0.0, max: 10.0 });
        assert!(matches!(
            minmax_scale(&ts(&[7.0, 7.0, 7.0])),
            Err(Error::DegenerateScale(_))
        ));
    }

    #[test]
    fn from_dated_rejects_gaps() {
        let pts = [(day(1, 1), 1.0), (day(1, 3), 2.0)];
        assert!(matches!(
            TimeSeries::from_dated("g", &pts),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn canonical_csv_round_trip() {
        let s = ts(&[1.0, 2.5, 1e15 + 3.0, 0.1]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,value\n2020-03-01,1\n"));
        let back = TimeSeries::read_csv("x", buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn canonical_csv_rejects_bad_header() {
        let text = "day,count\n2020-01-01,1\n";
        assert!(matches!(
            TimeSeries::read_csv("x", text.as_bytes()),
            Err(Error::Format(_))
        ));
    }
}
