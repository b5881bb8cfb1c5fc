//! Forecasting toolkit for cumulative epidemic case counts.
//!
//! Five model families (ARIMA, Holt-Winters, NARNN, LSTM and an additive
//! trend/seasonality model), an ARIMA-NARNN hybrid that models ARIMA
//! residuals with a neural network, and a benchmark harness that scores
//! 10-day forecasts by RMSE, MAE, MAPE and 90% interval coverage.

pub mod additive;
pub mod arima;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod hybrid;
pub mod ingest;
mod linalg;
pub mod neural;
pub mod optim;
pub mod seed;
pub mod series;
pub mod smoothing;

pub use error::{Error, Result};
pub use forecast::{ForecastResult, Z90};
pub use series::TimeSeries;
