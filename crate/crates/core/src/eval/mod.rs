//! Forecast accuracy metrics, per-group ranking and the benchmark harness.

mod benchmark;

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use benchmark::{
    fit_and_forecast, rank_cells, run_benchmark, run_cells, BenchmarkCell, BenchmarkSpec, ModelKind, ModelSettings,
    Scored, Study, DEFAULT_SEED,
};

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} actual values vs {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let ss: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((ss / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(s / actual.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape_pct(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    if let Some(index) = actual.iter().position(|&a| a == 0.0) {
        return Err(Error::ZeroActual { index });
    }
    let s: f64 = actual.iter().zip(predicted).map(|(a, p)| (100.0 * (a - p) / a).abs()).sum();
    Ok(s / actual.len() as f64)
}

/// Share of actuals inside `[lower, upper]` (inclusive), in percent.
pub fn coverage90_pct(actual: &[f64], lower: &[f64], upper: &[f64]) -> Result<f64> {
    check_pair(actual, lower)?;
    check_pair(actual, upper)?;
    if let Some(index) = lower.iter().zip(upper).position(|(l, u)| l > u) {
        return Err(Error::InvalidInterval { index });
    }
    let inside = actual
        .iter()
        .zip(lower.iter().zip(upper))
        .filter(|(a, (l, u))| *l <= *a && *a <= *u)
        .count();
    Ok(100.0 * inside as f64 / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub country: String,
    pub interval: String,
    pub rmse: f64,
    pub mae: f64,
    pub mape_pct: f64,
    pub coverage90_pct: f64,
}

impl MetricReport {
    pub fn score(
        model: &str,
        country: &str,
        interval: &str,
        actual: &[f64],
        point: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            country: country.into(),
            interval: interval.into(),
            rmse: rmse(actual, point)?,
            mae: mae(actual, point)?,
            mape_pct: mape_pct(actual, point)?,
            coverage90_pct: coverage90_pct(actual, lower, upper)?,
        })
    }
}

fn by_metrics(a: &MetricReport, b: &MetricReport) -> Ordering {
    a.rmse
        .total_cmp(&b.rmse)
        .then(a.mae.total_cmp(&b.mae))
        .then(a.mape_pct.total_cmp(&b.mape_pct))
        .then_with(|| a.model.cmp(&b.model))
}

/// One line of a rank table. Failed cells carry `error` and no rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub country: String,
    pub interval: String,
    pub model: String,
    pub rank: Option<usize>,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
}

/// Groups by `(country, interval)` and ranks each group by RMSE, then MAE,
/// MAPE and model label.
pub fn rank(reports: Vec<MetricReport>) -> RankTable {
    rank_with_errors(reports, Vec::new())
}

/// As [`rank`], with failed cells `(country, interval, model, message)`
/// listed after the ranked rows of their group.
pub fn rank_with_errors(mut reports: Vec<MetricReport>, mut errors: Vec<(String, String, String, String)>) -> RankTable {
    reports.sort_by(|a, b| {
        (&a.country, &a.interval)
            .cmp(&(&b.country, &b.interval))
            .then_with(|| by_metrics(a, b))
    });
    errors.sort();
    let mut groups: Vec<(String, String)> = reports
        .iter()
        .map(|r| (r.country.clone(), r.interval.clone()))
        .chain(errors.iter().map(|e| (e.0.clone(), e.1.clone())))
        .collect();
    groups.sort();
    groups.dedup();

    let mut rows = Vec::new();
    for (country, interval) in groups {
        let ranked = reports.iter().filter(|r| r.country == country && r.interval == interval);
        for (i, r) in ranked.enumerate() {
            rows.push(RankRow {
                country: country.clone(),
                interval: interval.clone(),
                model: r.model.clone(),
                rank: Some(i + 1),
                report: Some(r.clone()),
                error: None,
            });
        }
        for e in errors.iter().filter(|e| e.0 == country && e.1 == interval) {
            rows.push(RankRow {
                country: country.clone(),
                interval: interval.clone(),
                model: e.2.clone(),
                rank: None,
                report: None,
                error: Some(e.3.clone()),
            });
        }
    }
    RankTable { rows }
}

impl RankTable {
    pub fn reports(&self) -> impl Iterator<Item = &MetricReport> {
        self.rows.iter().filter_map(|r| r.report.as_ref())
    }

    /// Rows for one `(country, interval)` group in rank order.
    pub fn group(&self, country: &str, interval: &str) -> Vec<&RankRow> {
        self.rows
            .iter()
            .filter(|r| r.country == country && r.interval == interval)
            .collect()
    }

    pub fn find(&self, country: &str, interval: &str, model: &str) -> Option<&RankRow> {
        self.rows
            .iter()
            .find(|r| r.country == country && r.interval == interval && r.model == model)
    }

    /// `country,interval,model,rmse,mae,mape_pct,coverage90_pct,rank,error`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record([
            "country",
            "interval",
            "model",
            "rmse",
            "mae",
            "mape_pct",
            "coverage90_pct",
            "rank",
            "error",
        ])?;
        for row in &self.rows {
            let num = |f: fn(&MetricReport) -> f64| row.report.as_ref().map(|r| f(r).to_string()).unwrap_or_default();
            w.write_record([
                row.country.clone(),
                row.interval.clone(),
                row.model.clone(),
                num(|r| r.rmse),
                num(|r| r.mae),
                num(|r| r.mape_pct),
                num(|r| r.coverage90_pct),
                row.rank.map(|r| r.to_string()).unwrap_or_default(),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aligned plain-text rendering, one block per group.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut current: Option<(&str, &str)> = None;
        for row in &self.rows {
            let key = (row.country.as_str(), row.interval.as_str());
            if current != Some(key) {
                if current.is_some() {
                    out.push('\n');
                }
                out.push_str(&format!("{} {}\n", row.country, row.interval));
                out.push_str(&format!(
                    "{:>4}  {:<14}{:>14}{:>14}{:>10}{:>10}\n",
                    "rank", "model", "rmse", "mae", "mape%", "cov90%"
                ));
                current = Some(key);
            }
            match (&row.report, &row.error) {
                (Some(r), _) => out.push_str(&format!(
                    "{:>4}  {:<14}{:>14.2}{:>14.2}{:>10.3}{:>10.1}\n",
                    row.rank.unwrap_or(0),
                    row.model,
                    r.rmse,
                    r.mae,
                    r.mape_pct,
                    r.coverage90_pct
                )),
                (None, e) => out.push_str(&format!(
                    "{:>4}  {:<14}error: {}\n",
                    "-",
                    row.model,
                    e.as_deref().unwrap_or("unknown")
                )),
            }
        }
        out
    }
}

pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}
