//! Small from-scratch networks: a lagged feedforward net for residuals
//! (NARNN) and a single-layer LSTM for level data.

mod adam;
pub mod lstm;
pub mod narnn;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use lstm::{lstm_cell, lstm_fit, lstm_forecast, LstmConfig, LstmModel, LstmNet};
pub use narnn::{narnn_fit, narnn_forecast, select_lags, NarnnConfig, NarnnModel, NarnnNet};

use crate::error::{Error, Result};

/// Supervised pairs in model units (already scaled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Sliding windows over `values`: inputs are `values[t-w..t]` in time order.
    pub fn windows(values: &[f64], w: usize) -> Self {
        let (mut inputs, mut targets) = (Vec::new(), Vec::new());
        for t in w..values.len() {
            inputs.push(values[t - w..t].to_vec());
            targets.push(values[t]);
        }
        Self { inputs, targets }
    }
}

/// A network exposing its parameters as one flat vector plus the MSE loss
/// and its analytic gradient.
pub trait Differentiable {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]);
    fn loss_grad(&self, batch: &Batch) -> (f64, Vec<f64>);

    fn loss(&self, batch: &Batch) -> f64 {
        self.loss_grad(batch).0
    }
}

/// Result of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative: f64,
    pub max_absolute: f64,
}

/// Relative error denominators are floored here so that coordinates whose
/// true gradient is ~0 are judged on absolute error.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

pub fn grad_check_detail<M: Differentiable + Clone>(model: &M, batch: &Batch, eps: f64) -> GradCheck {
    let (_, analytic) = model.loss_grad(batch);
    let base = model.params();
    let mut probe = model.clone();
    let mut out = GradCheck {
        max_relative: 0.0,
        max_absolute: 0.0,
    };
    for (i, a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + eps;
        probe.set_params(&p);
        let up = probe.loss(batch);
        p[i] = base[i] - eps;
        probe.set_params(&p);
        let down = probe.loss(batch);
        let numeric = (up - down) / (2.0 * eps);
        let abs = (a - numeric).abs();
        let rel = abs / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        out.max_absolute = out.max_absolute.max(abs);
        out.max_relative = out.max_relative.max(rel);
    }
    out
}

/// Maximum relative discrepancy between the analytic gradient and central
/// finite differences over every parameter.
pub fn grad_check<M: Differentiable + Clone>(model: &M, batch: &Batch, eps: f64) -> f64 {
    grad_check_detail(model, batch, eps).max_relative
}

/// Full-batch training. Returns the loss recorded before each epoch's update.
pub(crate) fn train<M: Differentiable>(model: &mut M, batch: &Batch, epochs: usize, lr: f64) -> Result<Vec<f64>> {
    let mut params = model.params();
    let mut opt = Adam::new(params.len(), lr);
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grad) = model.loss_grad(batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        history.push(loss);
        opt.step(&mut params, &grad);
        model.set_params(&params);
    }
    Ok(history)
}

pub(crate) fn glorot(rng: &mut ChaCha8Rng, n: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-a..a)).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
