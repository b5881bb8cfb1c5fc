//! Decomposable additive model `y = g(t) + s(t) + h(t) + e`: piecewise-linear
//! trend with changepoints, weekly Fourier seasonality and holiday
//! indicators, fitted by ridge-penalised least squares.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{check_horizon, ForecastResult};
use crate::linalg::solve_spd;
use crate::series::TimeSeries;

pub const MIN_OBSERVATIONS: usize = 14;
const WEEK: f64 = 7.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holiday {
    pub date: NaiveDate,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveConfig {
    pub n_changepoints: usize,
    /// Fraction of the training history in which changepoints may sit.
    pub changepoint_range: f64,
    /// Weekly harmonics; each contributes a sine and a cosine column.
    pub fourier_order: usize,
    /// Ridge penalty on changepoint slope adjustments.
    pub ridge_delta: f64,
    /// Ridge penalty on seasonal and holiday coefficients.
    pub ridge_beta: f64,
    pub holidays: Vec<Holiday>,
}

impl Default for AdditiveConfig {
    fn default() -> Self {
        Self {
            n_changepoints: 10,
            changepoint_range: 0.8,
            fourier_order: 3,
            ridge_delta: 0.5,
            ridge_beta: 0.1,
            holidays: Vec::new(),
        }
    }
}

impl AdditiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "changepoint_range must be in (0, 1], got {}",
                self.changepoint_range
            )));
        }
        if !(self.ridge_delta >= 0.0 && self.ridge_beta >= 0.0) {
            return Err(Error::InvalidParams("ridge penalties must be non-negative".into()));
        }
        Ok(())
    }

    /// Distinct holiday labels in sorted order; one design column each.
    pub fn holiday_labels(&self) -> Vec<String> {
        self.holidays
            .iter()
            .map(|h| h.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Maps calendar dates onto model time: `t = days since start / span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScale {
    pub start: NaiveDate,
    /// Days covered by the training set (`n - 1`, at least 1).
    pub span: f64,
}

impl TimeScale {
    pub fn t(&self, date: NaiveDate) -> f64 {
        (date - self.start).num_days() as f64 / self.span
    }
}

/// Day number used by the Fourier terms, so that phase follows the weekday.
fn day_number(date: NaiveDate) -> f64 {
    f64::from(date.num_days_from_ce())
}

pub fn fourier_row(date: NaiveDate, order: usize) -> Vec<f64> {
    let d = day_number(date);
    let mut row = Vec::with_capacity(2 * order);
    for k in 1..=order {
        let a = 2.0 * PI * k as f64 * d / WEEK;
        row.push(a.sin());
        row.push(a.cos());
    }
    row
}

/// Design matrix rows:
/// `[1, t, (t - s_j)+ ..., sin/cos(2 pi k d / 7) ..., holiday indicators ...]`.
pub fn build_design(
    dates: &[NaiveDate],
    scale: &TimeScale,
    config: &AdditiveConfig,
    changepoints: &[f64],
) -> Vec<Vec<f64>> {
    let labels = config.holiday_labels();
    dates
        .iter()
        .map(|&date| {
            let t = scale.t(date);
            let mut row = vec![1.0, t];
            row.extend(changepoints.iter().map(|s| (t - s).max(0.0)));
            row.extend(fourier_row(date, config.fourier_order));
            row.extend(labels.iter().map(|l| {
                let hit = config.holidays.iter().any(|h| h.date == date && &h.label == l);
                if hit {
                    1.0
                } else {
                    0.0
                }
            }));
            row
        })
        .collect()
}

/// Changepoints at evenly spaced training indices within the first
/// `changepoint_range` of the history, excluding the first point.
pub fn changepoint_times(n: usize, config: &AdditiveConfig, scale: &TimeScale) -> Vec<f64> {
    let hist = ((n as f64 * config.changepoint_range).floor() as usize).max(1);
    let count = config.n_changepoints.min(hist.saturating_sub(1));
    if count == 0 {
        return Vec::new();
    }
    let last = (hist - 1) as f64;
    (1..=count)
        .map(|j| {
            let idx = (last * j as f64 / count as f64).round();
            idx / scale.span
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModel {
    pub name: String,
    pub config: AdditiveConfig,
    pub scale: TimeScale,
    /// Response divisor; coefficients below are in these units.
    pub y_scale: f64,
    pub k: f64,
    pub m: f64,
    pub delta: Vec<f64>,
    pub changepoints: Vec<f64>,
    /// Fourier coefficients (sin, cos per harmonic) then holiday coefficients.
    pub beta: Vec<f64>,
    pub holiday_labels: Vec<String>,
    pub fitted: Vec<f64>,
    pub sigma: f64,
    pub last_date: NaiveDate,
}

/// Trend, seasonal and holiday parts on the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub holiday: Vec<f64>,
}

impl Components {
    pub fn total(&self) -> Vec<f64> {
        (0..self.trend.len())
            .map(|i| self.trend[i] + self.seasonal[i] + self.holiday[i])
            .collect()
    }
}

/// Penalty weight per design column.
fn penalties(config: &AdditiveConfig, n_cp: usize, n_labels: usize) -> Vec<f64> {
    let mut p = vec![0.0, 0.0];
    p.extend(std::iter::repeat_n(config.ridge_delta, n_cp));
    p.extend(std::iter::repeat_n(config.ridge_beta, 2 * config.fourier_order + n_labels));
    p
}

/// `||y - X b||^2 + sum_j pen_j b_j^2` in scaled units.
pub fn ridge_objective(rows: &[Vec<f64>], y: &[f64], pen: &[f64], b: &[f64]) -> f64 {
    let sse: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, v)| (v - r.iter().zip(b).map(|(x, c)| x * c).sum::<f64>()).powi(2))
        .sum();
    sse + pen.iter().zip(b).map(|(p, c)| p * c * c).sum::<f64>()
}

/// Everything needed to check a fit against its normal equations.
pub struct DesignProblem {
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub penalties: Vec<f64>,
}

fn problem(series: &TimeSeries, config: &AdditiveConfig) -> Result<(DesignProblem, TimeScale, Vec<f64>, f64)> {
    config.validate()?;
    let n = series.len();
    if n < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData(format!(
            "additive model needs at least {MIN_OBSERVATIONS} observations, got {n}"
        )));
    }
    let scale = TimeScale {
        start: series.start(),
        span: ((n - 1) as f64).max(1.0),
    };
    let cps = changepoint_times(n, config, &scale);
    let dates: Vec<NaiveDate> = series.dates().collect();
    let rows = build_design(&dates, &scale, config, &cps);
    let y_scale = series.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let y_scale = if y_scale > 0.0 { y_scale } else { 1.0 };
    let y: Vec<f64> = series.values().iter().map(|v| v / y_scale).collect();
    let pen = penalties(config, cps.len(), config.holiday_labels().len());
    Ok((
        DesignProblem {
            rows,
            y,
            penalties: pen,
        },
        scale,
        cps,
        y_scale,
    ))
}

/// Design, scaled response and penalties exactly as [`fit`] sees them.
pub fn design_problem(series: &TimeSeries, config: &AdditiveConfig) -> Result<DesignProblem> {
    problem(series, config).map(|p| p.0)
}

/// Solves `(X'X + diag(pen)) b = X'y`.
fn solve(p: &DesignProblem) -> Result<Vec<f64>> {
    let cols = p.penalties.len();
    let x = DMatrix::from_fn(p.rows.len(), cols, |i, j| p.rows[i][j]);
    let mut a = x.transpose() * &x;
    for (j, pen) in p.penalties.iter().enumerate() {
        a[(j, j)] += pen;
    }
    let b = x.transpose() * DVector::from_column_slice(&p.y);
    solve_spd(a, &b)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::SingularSystem(format!("normal equations with {cols} columns are not positive definite")))
}

pub fn fit(series: &TimeSeries, config: &AdditiveConfig) -> Result<AdditiveModel> {
    let (prob, scale, changepoints, y_scale) = problem(series, config)?;
    let coef = solve(&prob)?;
    let n_cp = changepoints.len();
    let mut model = AdditiveModel {
        name: series.name().to_string(),
        config: config.clone(),
        scale,
        y_scale,
        m: coef[0],
        k: coef[1],
        delta: coef[2..2 + n_cp].to_vec(),
        changepoints,
        beta: coef[2 + n_cp..].to_vec(),
        holiday_labels: config.holiday_labels(),
        fitted: Vec::new(),
        sigma: 0.0,
        last_date: series.end(),
    };
    let dates: Vec<NaiveDate> = series.dates().collect();
    let fitted = model.decompose(&dates).total();
    let sse: f64 = fitted.iter().zip(series.values()).map(|(f, y)| (y - f).powi(2)).sum();
    model.sigma = (sse / series.len() as f64).sqrt();
    model.fitted = fitted;
    Ok(model)
}

impl AdditiveModel {
    /// Trend in the offset form `(k + a'delta) t + (m + a'gamma)` with
    /// `gamma_j = -s_j delta_j`, on the original scale.
    pub fn trend_at(&self, t: f64) -> f64 {
        let mut slope = self.k;
        let mut offset = self.m;
        for (s, d) in self.changepoints.iter().zip(&self.delta) {
            if t > *s {
                slope += d;
                offset -= s * d;
            }
        }
        (slope * t + offset) * self.y_scale
    }

    /// Slope after the last changepoint, per unit of model time.
    pub fn final_slope(&self) -> f64 {
        (self.k + self.delta.iter().sum::<f64>()) * self.y_scale
    }

    pub fn decompose(&self, dates: &[NaiveDate]) -> Components {
        let order = self.config.fourier_order;
        let (fourier, hol) = self.beta.split_at(2 * order);
        let mut out = Components {
            trend: Vec::with_capacity(dates.len()),
            seasonal: Vec::with_capacity(dates.len()),
            holiday: Vec::with_capacity(dates.len()),
        };
        for &date in dates {
            out.trend.push(self.trend_at(self.scale.t(date)));
            let s: f64 = fourier_row(date, order).iter().zip(fourier).map(|(x, b)| x * b).sum();
            out.seasonal.push(s * self.y_scale);
            let h: f64 = self
                .holiday_labels
                .iter()
                .zip(hol)
                .filter(|(l, _)| self.config.holidays.iter().any(|h| h.date == date && &h.label == *l))
                .map(|(_, b)| b)
                .sum();
            out.holiday.push(h * self.y_scale);
        }
        out
    }

    pub fn forecast_dates(&self, h: usize) -> Vec<NaiveDate> {
        (1..=h).map(|k| self.last_date + Duration::days(k as i64)).collect()
    }

    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        check_horizon(h)?;
        let dates = self.forecast_dates(h);
        Ok(ForecastResult::with_sqrt_h_bounds(
            "additive",
            dates[0],
            self.decompose(&dates).total(),
            self.sigma,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn forecast(model: &AdditiveModel, h: usize) -> Result<ForecastResult> {
    model.forecast(h)
}

pub fn decompose(model: &AdditiveModel, dates: &[NaiveDate]) -> Components {
    model.decompose(dates)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, 2).unwrap()
    }

    fn dates(n: usize) -> Vec<NaiveDate> {
        (0..n).map(|i| start() + Duration::days(i as i64)).collect()
    }

    #[test]
    fn plain_line_design() {
        let cfg = AdditiveConfig {
            n_changepoints: 0,
            fourier_order: 0,
            ..AdditiveConfig::default()
        };
        let scale = TimeScale { start: start(), span: 9.0 };
        let rows = build_design(&dates(10), &scale, &cfg, &[]);
        assert!(rows.iter().all(|r| r.len() == 2 && r[0] == 1.0));
        assert_eq!(rows[9][1], 1.0);
    }

    #[test]
    fn fourier_columns_bounded() {
        let cfg = AdditiveConfig {
            n_changepoints: 0,
            ..AdditiveConfig::default()
        };
        let scale = TimeScale { start: start(), span: 29.0 };
        for r in build_design(&dates(30), &scale, &cfg, &[]) {
            assert_eq!(r.len(), 2 + 6);
            assert!(r[2..].iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn changepoint_column_hinge() {
        let cfg = AdditiveConfig {
            n_changepoints: 0,
            fourier_order: 0,
            ..AdditiveConfig::default()
        };
        let scale = TimeScale { start: start(), span: 19.0 };
        let s = 8.0 / 19.0;
        let rows = build_design(&dates(20), &scale, &cfg, &[s]);
        for (i, r) in rows.iter().enumerate() {
            let t = i as f64 / 19.0;
            let expected = if i <= 8 { 0.0 } else { t - s };
            assert!((r[2] - expected).abs() < 1e-15, "day {i}");
        }
    }

    #[test]
    fn changepoints_within_range() {
        let cfg = AdditiveConfig::default();
        let scale = TimeScale { start: start(), span: 99.0 };
        let cps = changepoint_times(100, &cfg, &scale);
        assert_eq!(cps.len(), 10);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        assert!(cps[0] > 0.0 && *cps.last().unwrap() <= 79.0 / 99.0 + 1e-12);
        // too short a history caps the count
        let few = changepoint_times(5, &cfg, &TimeScale { start: start(), span: 4.0 });
        assert_eq!(few.len(), 3);
    }

    #[test]
    fn too_short() {
        let s = TimeSeries::new("x", start(), vec![1.0; 13]).unwrap();
        assert!(matches!(fit(&s, &AdditiveConfig::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn collinear_without_ridge_is_singular() {
        // a holiday on every day duplicates the intercept
        let cfg = AdditiveConfig {
            n_changepoints: 0,
            fourier_order: 0,
            ridge_beta: 0.0,
            ridge_delta: 0.0,
            holidays: dates(20)
                .into_iter()
                .map(|date| Holiday {
                    date,
                    label: "all".into(),
                })
                .collect(),
            ..AdditiveConfig::default()
        };
        let s = TimeSeries::new("x", start(), (0..20).map(f64::from).collect()).unwrap();
        assert!(matches!(fit(&s, &cfg), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn holiday_labels_sorted_unique() {
        let h = |d: u32, l: &str| Holiday {
            date: NaiveDate::from_ymd_opt(2020, 5, d).unwrap(),
            label: l.into(),
        };
        let cfg = AdditiveConfig {
            holidays: vec![h(3, "b"), h(1, "a"), h(9, "b")],
            ..AdditiveConfig::default()
        };
        assert_eq!(cfg.holiday_labels(), vec!["a".to_string(), "b".to_string()]);
    }
}
