//! ARIMA-NARNN hybrid: ARIMA takes the linear structure, a NARNN is trained
//! on the ARIMA residuals, and forecasts are the sum of the two stages.

use serde::{Deserialize, Serialize};

use crate::arima::{self, ArimaModel, ArimaOptions, ArimaOrder, OrderGrid};
use crate::error::{Error, Result};
use crate::forecast::ForecastResult;
use crate::neural::{narnn, NarnnConfig, NarnnModel};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// `None` searches `grid` by AICc.
    pub order: Option<ArimaOrder>,
    pub grid: OrderGrid,
    pub arima: ArimaOptions,
    pub narnn: NarnnConfig,
    /// Lag counts tried for the NARNN; empty means `narnn.lags` only.
    pub lag_candidates: Vec<usize>,
    /// Trailing residuals held out when choosing among `lag_candidates`.
    pub lag_validation: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            order: None,
            grid: OrderGrid::default(),
            arima: ArimaOptions::default(),
            narnn: NarnnConfig::default(),
            lag_candidates: vec![3, 5, 7],
            lag_validation: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub linear: ArimaModel,
    pub nonlinear: NarnnModel,
    /// Last residuals, oldest first; seeds the closed-loop NARNN forecast.
    pub residual_tail: Vec<f64>,
}

/// Lag counts that can actually be trained on `have` residuals. Selection
/// needs room for the validation block as well.
fn feasible_lags(have: usize, config: &HybridConfig) -> Result<Vec<usize>> {
    let candidates = if config.lag_candidates.is_empty() {
        vec![config.narnn.lags]
    } else {
        config.lag_candidates.clone()
    };
    let smallest = *candidates.iter().min().expect("non-empty");
    if have <= smallest + 10 {
        return Err(Error::InsufficientResiduals {
            have,
            need: smallest + 11,
        });
    }
    if candidates.len() == 1 {
        return Ok(candidates);
    }
    let selectable: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|l| have.saturating_sub(config.lag_validation) > l + 10)
        .collect();
    if selectable.is_empty() {
        // too short to hold out a validation block; fall back to one size
        let fallback = if candidates.contains(&config.narnn.lags) && have > config.narnn.lags + 10 {
            config.narnn.lags
        } else {
            smallest
        };
        Ok(vec![fallback])
    } else {
        Ok(selectable)
    }
}

pub fn fit(series: &TimeSeries, config: &HybridConfig) -> Result<HybridModel> {
    let linear = match config.order {
        Some(order) => arima::fit_with(series, order, &config.arima)?,
        None => arima::select_and_fit(series, &config.grid, &config.arima)?,
    };
    fit_residuals(linear, config)
}

/// Stage two on an already fitted ARIMA model.
pub fn fit_residuals(linear: ArimaModel, config: &HybridConfig) -> Result<HybridModel> {
    let residuals = linear.residual_series();
    let lags = feasible_lags(residuals.len(), config)?;
    let nonlinear = narnn::select_lags(&residuals, &config.narnn, &lags, config.lag_validation)?;
    let n = nonlinear.config.lags;
    let residual_tail = residuals.values()[residuals.len() - n..].to_vec();
    Ok(HybridModel {
        linear,
        nonlinear,
        residual_tail,
    })
}

impl HybridModel {
    /// `(linear, nonlinear)` stage forecasts.
    pub fn decompose_forecast(&self, h: usize) -> Result<(ForecastResult, Vec<f64>)> {
        let lin = self.linear.forecast(h)?;
        let non = self.nonlinear.forecast(&self.residual_tail, h)?;
        Ok((lin, non))
    }

    /// Sum of the stage forecasts. Bounds are the ARIMA bounds shifted by
    /// the NARNN adjustment.
    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        let (lin, non) = self.decompose_forecast(h)?;
        let shift = |v: &[f64]| v.iter().zip(&non).map(|(a, b)| a + b).collect::<Vec<f64>>();
        Ok(ForecastResult {
            model: "hybrid".into(),
            start: lin.start,
            point: shift(&lin.point),
            lower: shift(&lin.lower),
            upper: shift(&lin.upper),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn forecast(model: &HybridModel, h: usize) -> Result<ForecastResult> {
    model.forecast(h)
}

pub fn decompose_forecast(model: &HybridModel, h: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    model.decompose_forecast(h).map(|(l, n)| (l.point, n))
}
