//! Holt-Winters smoothing with multiplicative seasonality.
//!
//! One step, with `s_old` the index observed one season ago:
//!
//! ```text
//! L_i = alpha * y_i / s_old + (1 - alpha) * (L_{i-1} + B_{i-1})
//! B_i = beta * (L_i - L_{i-1}) + (1 - beta) * B_{i-1}
//! S_i = gamma * y_i / L_i + (1 - gamma) * s_old
//! ```
//!
//! and the k-step forecast is `(L_i + k B_i) * S_{i+k-m}`.

use std::collections::VecDeque;

use chrono::{Duration, NaiveDate};
use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{check_horizon, ForecastResult};
use crate::optim::{nelder_mead_restarted, NelderMeadOptions};
use crate::series::TimeSeries;

pub const DEFAULT_SEASON: usize = 7;

/// Initial indices all within `1 ± SEASONAL_TOLERANCE` switch the model to
/// plain Holt smoothing.
pub const SEASONAL_TOLERANCE: f64 = 0.01;

const LATTICE: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m: usize,
}

impl HwParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, m: usize) -> Result<Self> {
        let p = Self { alpha, beta, gamma, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.alpha) && unit(self.beta) && unit(self.gamma)) {
            return Err(Error::InvalidParams(format!(
                "smoothing factors must lie in [0, 1], got ({}, {}, {})",
                self.alpha, self.beta, self.gamma
            )));
        }
        if self.m < 2 {
            return Err(Error::InvalidParams(format!("season length must be >= 2, got {}", self.m)));
        }
        Ok(())
    }
}

/// Level, trend and the last `m` seasonal indices. The front of the ring is
/// the index that applies to the next observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwState {
    pub level: f64,
    pub trend: f64,
    pub seasonal: VecDeque<f64>,
}

impl HwState {
    /// Index for `k` steps ahead (k >= 1).
    pub fn seasonal_ahead(&self, k: usize) -> f64 {
        self.seasonal[(k - 1) % self.seasonal.len()]
    }

    pub fn one_step(&self) -> f64 {
        (self.level + self.trend) * self.seasonal[0]
    }

    /// True when every index is within `1 ± tol`.
    pub fn is_flat(&self, tol: f64) -> bool {
        self.seasonal.iter().all(|s| (s - 1.0).abs() <= tol)
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0)) {
        Some(index) => Err(Error::Positivity {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn initialize_values(y: &[f64], m: usize) -> Result<HwState> {
    if m < 2 {
        return Err(Error::InvalidParams(format!("season length must be >= 2, got {m}")));
    }
    if y.len() < 2 * m {
        return Err(Error::InsufficientData(format!(
            "Holt-Winters with m={m} needs at least {} observations, got {}",
            2 * m,
            y.len()
        )));
    }
    check_positive(y)?;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = mean(&y[..m]);
    let second = mean(&y[m..2 * m]);
    let raw: Vec<f64> = y[..m].iter().map(|v| v / first).collect();
    let norm = mean(&raw);
    Ok(HwState {
        level: first,
        trend: (second - first) / m as f64,
        seasonal: raw.iter().map(|s| s / norm).collect(),
    })
}

/// Initial state from the first two seasons.
pub fn initialize(series: &TimeSeries, m: usize) -> Result<HwState> {
    initialize_values(series.values(), m)
}

/// Applies one observation: level, then trend, then seasonal.
pub fn smooth_step(state: &HwState, observation: f64, params: &HwParams) -> Result<HwState> {
    if !(observation > 0.0) {
        return Err(Error::Positivity {
            index: 0,
            value: observation,
        });
    }
    let mut next = state.clone();
    step_in_place(&mut next, observation, params);
    Ok(next)
}

fn step_in_place(state: &mut HwState, y: f64, p: &HwParams) {
    let s_old = state.seasonal.pop_front().expect("non-empty seasonal ring");
    let prev = state.level;
    state.level = p.alpha * y / s_old + (1.0 - p.alpha) * (prev + state.trend);
    state.trend = p.beta * (state.level - prev) + (1.0 - p.beta) * state.trend;
    state.seasonal.push_back(p.gamma * y / state.level + (1.0 - p.gamma) * s_old);
}

/// Runs the recursion over `y[m..]` and returns the final state with the
/// one-step forecasts made along the way. `None` if the state degenerates.
fn run(y: &[f64], init: &HwState, p: &HwParams) -> Option<(HwState, Vec<f64>)> {
    let mut state = init.clone();
    let mut fitted = Vec::with_capacity(y.len().saturating_sub(p.m));
    for &obs in &y[p.m..] {
        fitted.push(state.one_step());
        step_in_place(&mut state, obs, p);
        if !(state.level > 0.0) || !state.trend.is_finite() || state.seasonal.back().is_none_or(|s| !(*s > 0.0)) {
            return None;
        }
    }
    Some((state, fitted))
}

fn sse(y: &[f64], init: &HwState, p: &HwParams) -> f64 {
    match run(y, init, p) {
        Some((_, fitted)) => fitted.iter().zip(&y[p.m..]).map(|(f, o)| (o - f).powi(2)).sum(),
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwModel {
    pub name: String,
    pub params: HwParams,
    /// False when the initial indices were flat and the model runs as Holt smoothing.
    pub seasonal: bool,
    pub state: HwState,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_start: NaiveDate,
    pub sigma: f64,
    pub sse: f64,
    pub last_date: NaiveDate,
}

/// In-sample SSE at given parameters, using the same initialisation and
/// Holt fallback as [`fit`].
pub fn sse_at(series: &TimeSeries, params: &HwParams) -> Result<f64> {
    params.validate()?;
    let mut init = initialize_values(series.values(), params.m)?;
    let mut p = *params;
    if init.is_flat(SEASONAL_TOLERANCE) {
        init.seasonal.iter_mut().for_each(|s| *s = 1.0);
        p.gamma = 0.0;
    }
    Ok(sse(series.values(), &init, &p))
}

/// Fits at fixed parameters (no optimisation).
pub fn fit_with_params(series: &TimeSeries, params: &HwParams) -> Result<HwModel> {
    params.validate()?;
    let y = series.values();
    let mut init = initialize_values(y, params.m)?;
    let seasonal = !init.is_flat(SEASONAL_TOLERANCE);
    let mut p = *params;
    if !seasonal {
        init.seasonal.iter_mut().for_each(|s| *s = 1.0);
        p.gamma = 0.0;
    }
    build(series, &init, p, seasonal)
}

fn build(series: &TimeSeries, init: &HwState, p: HwParams, seasonal: bool) -> Result<HwModel> {
    let y = series.values();
    let (state, fitted) = run(y, init, &p).ok_or_else(|| {
        Error::InvalidParams(format!(
            "smoothing state left the positive region at ({}, {}, {})",
            p.alpha, p.beta, p.gamma
        ))
    })?;
    let residuals: Vec<f64> = y[p.m..].iter().zip(&fitted).map(|(o, f)| o - f).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma = (sse / residuals.len() as f64).sqrt();
    Ok(HwModel {
        name: series.name().to_string(),
        params: p,
        seasonal,
        state,
        fitted,
        residuals,
        residual_start: series.date_at(p.m),
        sigma,
        sse,
        last_date: series.end(),
    })
}

/// Chooses (alpha, beta, gamma) in the unit cube minimising in-sample
/// one-step squared error, multi-starting Nelder-Mead from a 3x3x3 lattice.
pub fn fit(series: &TimeSeries, m: usize) -> Result<HwModel> {
    let y = series.values();
    let mut init = initialize_values(y, m)?;
    let seasonal = !init.is_flat(SEASONAL_TOLERANCE);
    if !seasonal {
        debug!("{}: flat seasonal indices, using Holt smoothing", series.name());
        init.seasonal.iter_mut().for_each(|s| *s = 1.0);
    }
    let dims = if seasonal { 3 } else { 2 };
    let to_params = |x: &[f64]| HwParams {
        alpha: x[0],
        beta: x[1],
        gamma: if seasonal { x[2] } else { 0.0 },
        m,
    };
    let objective = |x: &[f64]| {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return f64::INFINITY;
        }
        sse(y, &init, &to_params(x))
    };

    let starts: Vec<Vec<f64>> = if seasonal {
        LATTICE
            .iter()
            .flat_map(|&a| LATTICE.iter().flat_map(move |&b| LATTICE.iter().map(move |&g| vec![a, b, g])))
            .collect()
    } else {
        LATTICE.iter().flat_map(|&a| LATTICE.iter().map(move |&b| vec![a, b])).collect()
    };
    let steps = vec![0.05; dims];
    let opts = NelderMeadOptions {
        max_iter: 5_000,
        ..NelderMeadOptions::default()
    };
    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|x0| {
            let start = (x0.clone(), objective(x0));
            let min = nelder_mead_restarted(objective, x0, &steps, opts);
            if min.fx <= start.1 {
                (min.x, min.fx)
            } else {
                start
            }
        })
        .collect();
    let (best, best_sse) = results
        .into_iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1).then_with(|| {
                a.0.iter()
                    .zip(&b.0)
                    .map(|(u, v)| u.total_cmp(v))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        })
        .expect("non-empty lattice");
    if !best_sse.is_finite() {
        return Err(Error::Convergence {
            iterations: 0,
            best_objective: best_sse,
            best_params: best,
        });
    }
    build(series, &init, to_params(&best), seasonal)
}

impl HwModel {
    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        check_horizon(h)?;
        let point: Vec<f64> = (1..=h)
            .map(|k| (self.state.level + k as f64 * self.state.trend) * self.state.seasonal_ahead(k))
            .collect();
        Ok(ForecastResult::with_sqrt_h_bounds(
            "holt_winters",
            self.last_date + Duration::days(1),
            point,
            self.sigma,
        ))
    }

    pub fn residual_series(&self) -> Result<TimeSeries> {
        TimeSeries::new(format!("{}-residuals", self.name), self.residual_start, self.residuals.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn forecast(model: &HwModel, h: usize) -> Result<ForecastResult> {
    model.forecast(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()
    }

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new("x", date(), v).unwrap()
    }

    fn model_with(state: HwState, m: usize, sigma: f64) -> HwModel {
        HwModel {
            name: "x".into(),
            params: HwParams::new(0.5, 0.5, 0.5, m).unwrap(),
            seasonal: true,
            state,
            fitted: vec![],
            residuals: vec![],
            residual_start: date(),
            sigma,
            sse: 0.0,
            last_date: date(),
        }
    }

    #[test]
    fn init_constant() {
        let s = initialize(&series(vec![4.0; 14]), 7).unwrap();
        assert_eq!(s.level, 4.0);
        assert_eq!(s.trend, 0.0);
        assert!(s.seasonal.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn init_two_period() {
        let c = 3.0;
        let s = initialize(&series(vec![c, 2.0 * c, c, 2.0 * c]), 2).unwrap();
        assert!((s.level - 1.5 * c).abs() < 1e-12);
        assert_eq!(s.trend, 0.0);
        assert!((s.seasonal[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.seasonal[1] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn init_rejects_zero_and_short() {
        let mut v = vec![1.0; 14];
        v[5] = 0.0;
        assert_eq!(
            initialize(&series(v), 7),
            Err(Error::Positivity { index: 5, value: 0.0 })
        );
        assert!(matches!(initialize(&series(vec![1.0; 13]), 7), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn zero_smoothing_only_rotates() {
        let s = HwState {
            level: 10.0,
            trend: 1.0,
            seasonal: VecDeque::from(vec![0.9, 1.0, 1.1]),
        };
        let p = HwParams::new(0.0, 0.0, 0.0, 3).unwrap();
        let n = smooth_step(&s, 50.0, &p).unwrap();
        assert_eq!(n.level, 11.0);
        assert_eq!(n.trend, 1.0);
        assert_eq!(n.seasonal, VecDeque::from(vec![1.0, 1.1, 0.9]));
    }

    #[test]
    fn full_level_tracking() {
        let s = HwState {
            level: 10.0,
            trend: 0.0,
            seasonal: VecDeque::from(vec![1.0, 1.0]),
        };
        let n = smooth_step(&s, 14.0, &HwParams::new(1.0, 0.0, 0.0, 2).unwrap()).unwrap();
        assert_eq!(n.level, 14.0);
        assert_eq!(n.trend, 0.0);
    }

    #[test]
    fn half_smoothing_hand_values() {
        let s = HwState {
            level: 10.0,
            trend: 2.0,
            seasonal: VecDeque::from(vec![1.0, 1.0]),
        };
        let n = smooth_step(&s, 14.0, &HwParams::new(0.5, 0.5, 0.5, 2).unwrap()).unwrap();
        assert!((n.level - 13.0).abs() < 1e-12);
        assert!((n.trend - 2.5).abs() < 1e-12);
        let expected = 0.5 * 14.0 / 13.0 + 0.5;
        assert!((n.seasonal[1] - expected).abs() < 1e-12);
        assert!((n.seasonal[1] - 1.0385).abs() < 1e-4);
    }

    #[test]
    fn step_rejects_non_positive() {
        let s = HwState {
            level: 1.0,
            trend: 0.0,
            seasonal: VecDeque::from(vec![1.0, 1.0]),
        };
        let p = HwParams::new(0.5, 0.5, 0.5, 2).unwrap();
        assert!(matches!(smooth_step(&s, -1.0, &p), Err(Error::Positivity { .. })));
    }

    #[test]
    fn params_validated() {
        assert!(HwParams::new(1.1, 0.0, 0.0, 7).is_err());
        assert!(HwParams::new(0.1, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn forecast_unit_seasonality() {
        let state = HwState {
            level: 100.0,
            trend: 5.0,
            seasonal: VecDeque::from(vec![1.0; 7]),
        };
        let f = model_with(state, 7, 1.0).forecast(3).unwrap();
        assert_eq!(f.point, vec![105.0, 110.0, 115.0]);
    }

    #[test]
    fn forecast_index_alignment() {
        let state = HwState {
            level: 100.0,
            trend: 0.0,
            seasonal: VecDeque::from(vec![0.9, 1.1]),
        };
        let f = model_with(state, 2, 1.0).forecast(2).unwrap();
        assert!((f.point[0] - 90.0).abs() < 1e-12 && (f.point[1] - 110.0).abs() < 1e-12);
    }

    #[test]
    fn width_scales_with_sqrt_k() {
        let state = HwState {
            level: 100.0,
            trend: 1.0,
            seasonal: VecDeque::from(vec![1.0; 7]),
        };
        let w = model_with(state, 7, 3.0).forecast(4).unwrap().widths();
        assert!((w[3] - 2.0 * w[0]).abs() < 1e-12);
    }

    #[test]
    fn zero_horizon_rejected() {
        let state = HwState {
            level: 1.0,
            trend: 0.0,
            seasonal: VecDeque::from(vec![1.0; 2]),
        };
        assert_eq!(model_with(state, 2, 1.0).forecast(0), Err(Error::InvalidHorizon));
    }

    #[test]
    fn constant_series_forecast_is_constant() {
        let m = fit(&series(vec![42.0; 30]), 7).unwrap();
        assert!(!m.seasonal);
        let f = m.forecast(10).unwrap();
        assert!(f.point.iter().all(|v| (v - 42.0).abs() < 1e-9), "{:?}", f.point);
    }

    #[test]
    fn json_round_trip() {
        let v: Vec<f64> = (0..28).map(|i| 10.0 + i as f64 + if i % 7 == 0 { 5.0 } else { 0.0 }).collect();
        let m = fit(&series(v), 7).unwrap();
        let back = HwModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
