//! JHU CSSE global time-series ingestion: parsing, country aggregation and
//! interval slicing.

use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const FIXED_HEADER: [&str; 4] = ["Province/State", "Country/Region", "Lat", "Long"];

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub province: Option<String>,
    pub country: String,
    /// Kept verbatim; the feed sometimes leaves coordinates blank.
    pub lat: String,
    pub long: String,
    pub counts: Vec<u64>,
}

/// One parsed `time_series_covid19_confirmed_global.csv` payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCaseTable {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<RawRow>,
}

/// Parses a US-style `m/d/yy` header into a date in the 2000s.
pub fn parse_jhu_date(text: &str) -> Option<NaiveDate> {
    let mut parts = text.trim().split('/');
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = parts.next()?.parse().ok()?;
    let year_raw = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let year: i32 = year_raw.parse().ok()?;
    let year = match year_raw.len() {
        2 => 2000 + year,
        4 => year,
        _ => return None,
    };
    NaiveDate::from_ymd_opt(year, month, day)
}

fn format_jhu_date(date: NaiveDate) -> String {
    format!("{}/{}/{:02}", date.month(), date.day(), date.year() % 100)
}

pub fn parse_jhu_csv<R: Read>(payload: R) -> Result<RawCaseTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(payload);
    let headers = rdr.headers()?.clone();
    if headers.len() < FIXED_HEADER.len() + 1 {
        return Err(Error::Format(format!(
            "header has {} columns; expected {} fixed columns and at least one date",
            headers.len(),
            FIXED_HEADER.len()
        )));
    }
    for (i, expected) in FIXED_HEADER.iter().enumerate() {
        // tolerate a UTF-8 byte-order mark on the first cell
        let found = headers[i].trim_start_matches('\u{feff}').trim();
        if found != *expected {
            return Err(Error::Format(format!(
                "column {i} should be {expected:?}, found {found:?}"
            )));
        }
    }
    let mut dates = Vec::with_capacity(headers.len() - 4);
    for (i, h) in headers.iter().enumerate().skip(4) {
        let date = parse_jhu_date(h)
            .ok_or_else(|| Error::Format(format!("column {i}: {h:?} is not an m/d/yy date")))?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::Format(format!(
                    "date columns are not increasing: {h:?} follows {}",
                    format_jhu_date(*prev)
                )));
            }
        }
        dates.push(date);
    }

    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        if record.len() != headers.len() {
            return Err(Error::Format(format!(
                "row {row_no} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let province = Some(record[0].trim())
            .filter(|p| !p.is_empty())
            .map(str::to_string);
        let country = record[1].trim().to_string();
        if country.is_empty() {
            return Err(Error::Cell {
                row: row_no,
                column: 1,
                value: String::new(),
            });
        }
        let counts = record
            .iter()
            .enumerate()
            .skip(4)
            .map(|(col, cell)| {
                cell.trim().parse::<u64>().map_err(|_| Error::Cell {
                    row: row_no,
                    column: col,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(RawRow {
            province,
            country,
            lat: record[2].to_string(),
            long: record[3].to_string(),
            counts,
        });
    }
    Ok(RawCaseTable { dates, rows })
}

impl RawCaseTable {
    /// Writes the table back in the JHU wire format.
    pub fn write_jhu_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<String> = FIXED_HEADER.iter().map(|s| s.to_string()).collect();
        header.extend(self.dates.iter().map(|d| format_jhu_date(*d)));
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.province.clone().unwrap_or_default(),
                row.country.clone(),
                row.lat.clone(),
                row.long.clone(),
            ];
            rec.extend(row.counts.iter().map(u64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn countries(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rows.iter().map(|r| r.country.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    fn check_daily(&self) -> Result<()> {
        for w in self.dates.windows(2) {
            if (w[1] - w[0]).num_days() != 1 {
                return Err(Error::Format(format!(
                    "date columns skip from {} to {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Sums every province row of `country` per date.
pub fn aggregate_country(table: &RawCaseTable, country: &str) -> Result<TimeSeries> {
    let matching: Vec<&RawRow> = table.rows.iter().filter(|r| r.country == country).collect();
    if matching.is_empty() {
        return Err(Error::NotFound {
            query: country.to_string(),
            suggestions: suggest_countries(&table.countries(), country),
        });
    }
    table.check_daily()?;
    let mut totals = vec![0u64; table.dates.len()];
    for row in matching {
        for (t, c) in totals.iter_mut().zip(&row.counts) {
            *t += c;
        }
    }
    for (i, w) in totals.windows(2).enumerate() {
        if w[1] < w[0] {
            warn!(
                "{country}: cumulative count drops from {} to {} on {}; kept as reported",
                w[0],
                w[1],
                table.dates[i + 1]
            );
        }
    }
    let start = *table.dates.first().ok_or(Error::EmptyInput)?;
    TimeSeries::new(country, start, totals.into_iter().map(|v| v as f64).collect())
}

/// Countries within edit distance 2 (case-insensitive) of `query`, closest first.
pub fn suggest_countries(known: &[String], query: &str) -> Vec<String> {
    let q = query.to_lowercase();
    let mut scored: Vec<(usize, &String)> = known
        .iter()
        .map(|k| (strsim::levenshtein(&k.to_lowercase(), &q), k))
        .filter(|(d, _)| *d <= 2)
        .collect();
    scored.sort();
    scored.into_iter().map(|(_, k)| k.clone()).collect()
}

/// A labelled, inclusive test window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl IntervalSpec {
    /// Labels the window like `6MAY-15MAY`.
    pub fn from_dates(start: NaiveDate, end: NaiveDate) -> Self {
        let tag = |d: NaiveDate| format!("{}{}", d.day(), month_abbrev(d.month()));
        Self {
            label: format!("{}-{}", tag(start), tag(end)),
            start,
            end,
        }
    }

    pub fn len_days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    /// The three 10-day windows of the 2020 comparison.
    pub fn benchmark_defaults() -> Vec<Self> {
        let d = |m, day| NaiveDate::from_ymd_opt(2020, m, day).expect("valid date");
        vec![
            Self::from_dates(d(5, 6), d(5, 15)),
            Self::from_dates(d(7, 21), d(7, 30)),
            Self::from_dates(d(8, 1), d(8, 10)),
        ]
    }
}

fn month_abbrev(m: u32) -> &'static str {
    [
        "JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC",
    ][(m - 1) as usize]
}

/// History from the first reported case up to and including `interval.end`.
pub fn slice_for_interval(series: &TimeSeries, interval: &IntervalSpec) -> Result<TimeSeries> {
    let out_of_range = || Error::OutOfRange {
        date: interval.end,
        first: series.start(),
        last: series.end(),
    };
    let end = series.index_of(interval.end).ok_or_else(out_of_range)?;
    let first_case = series.values()[..=end]
        .iter()
        .position(|&v| v >= 1.0)
        .ok_or_else(|| {
            Error::InsufficientData(format!(
                "{} has no reported cases on or before {}",
                series.name(),
                interval.end
            ))
        })?;
    series.slice(first_case, end + 1)
}
