use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 90% standard-normal quantile.
pub const Z90: f64 = 1.644_853_626_951_472_2;

/// Point forecasts and 90% bounds for consecutive days starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model: String,
    pub start: NaiveDate,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ForecastResult {
    /// Bounds `point[k] ± Z90 * sd[k]`.
    pub fn from_sd(model: impl Into<String>, start: NaiveDate, point: Vec<f64>, sd: &[f64]) -> Self {
        let lower = point.iter().zip(sd).map(|(p, s)| p - Z90 * s).collect();
        let upper = point.iter().zip(sd).map(|(p, s)| p + Z90 * s).collect();
        Self {
            model: model.into(),
            start,
            point,
            lower,
            upper,
        }
    }

    /// Gaussian residual approximation: the k-step standard deviation grows as `sigma * sqrt(k)`.
    pub fn with_sqrt_h_bounds(
        model: impl Into<String>,
        start: NaiveDate,
        point: Vec<f64>,
        sigma: f64,
    ) -> Self {
        let sd: Vec<f64> = (1..=point.len()).map(|k| sigma * (k as f64).sqrt()).collect();
        Self::from_sd(model, start, point, &sd)
    }

    pub fn horizon(&self) -> usize {
        self.point.len()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.point.len()).map(|i| self.start + Duration::days(i as i64))
    }

    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }
}

pub(crate) fn check_horizon(h: usize) -> Result<()> {
    if h == 0 {
        Err(Error::InvalidHorizon)
    } else {
        Ok(())
    }
}
