//! Nonlinear autoregressive network: `R_t = f(R_{t-1}, ..., R_{t-n}) + e_t`
//! with one tanh hidden layer and a linear output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{glorot, train, Batch, Differentiable};
use crate::error::{Error, Result};
use crate::seed::derive_index_seed;
use crate::series::{SymmetricScale, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarnnConfig {
    pub lags: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for NarnnConfig {
    fn default() -> Self {
        Self {
            lags: 5,
            hidden: 10,
            epochs: 500,
            learning_rate: 0.01,
            seed: 0,
            restarts: 5,
        }
    }
}

impl NarnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lags == 0 || self.hidden == 0 || self.restarts == 0 {
            return Err(Error::InvalidParams(format!(
                "NARNN needs lags, hidden and restarts >= 1 (got {}, {}, {})",
                self.lags, self.hidden, self.restarts
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Weights only. Inputs are ordered most recent lag first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarnnNet {
    pub lags: usize,
    pub hidden: usize,
    /// `hidden x lags`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl NarnnNet {
    pub fn zeros(lags: usize, hidden: usize) -> Self {
        Self {
            lags,
            hidden,
            w1: vec![0.0; hidden * lags],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn random(lags: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = glorot(&mut rng, hidden * lags, lags, hidden);
        let w2 = glorot(&mut rng, hidden, hidden, 1);
        Self {
            lags,
            hidden,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: 0.0,
        }
    }

    fn hidden_layer(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.lags..(j + 1) * self.lags];
                (self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect()
    }

    /// Output for one input vector (most recent lag first).
    pub fn forward(&self, x: &[f64]) -> f64 {
        let z = self.hidden_layer(x);
        self.b2 + self.w2.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }
}

impl Differentiable for NarnnNet {
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.w1.len() + 2 * self.hidden + 1);
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.hidden);
        let (c, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = rest[0];
    }

    fn loss_grad(&self, batch: &Batch) -> (f64, Vec<f64>) {
        let n = batch.len() as f64;
        let (h, l) = (self.hidden, self.lags);
        let mut g = vec![0.0; h * l + 2 * h + 1];
        let mut loss = 0.0;
        for (x, t) in batch.inputs.iter().zip(&batch.targets) {
            let z = self.hidden_layer(x);
            let y = self.b2 + self.w2.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>();
            let err = y - t;
            loss += err * err;
            let d = 2.0 * err / n;
            g[h * l + 2 * h] += d;
            for j in 0..h {
                g[h * l + h + j] += d * z[j];
                let da = d * self.w2[j] * (1.0 - z[j] * z[j]);
                g[h * l + j] += da;
                for (k, xv) in x.iter().enumerate() {
                    g[j * l + k] += da * xv;
                }
            }
        }
        (loss / n, g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarnnModel {
    pub net: NarnnNet,
    pub scale: SymmetricScale,
    pub config: NarnnConfig,
    /// Restart that produced `net`.
    pub restart: usize,
    /// MSE (scaled units) at the returned weights.
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
}

/// Lag-embedded pairs: input `[r_{t-1}, ..., r_{t-n}]`, target `r_t`.
pub fn lag_batch(values: &[f64], lags: usize) -> Batch {
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    for t in lags..values.len() {
        inputs.push((1..=lags).map(|k| values[t - k]).collect());
        targets.push(values[t]);
    }
    Batch { inputs, targets }
}

fn fit_values(values: &[f64], config: &NarnnConfig) -> Result<NarnnModel> {
    config.validate()?;
    if values.len() <= config.lags + 10 {
        return Err(Error::InsufficientData(format!(
            "NARNN with {} lags needs more than {} residuals, got {}",
            config.lags,
            config.lags + 10,
            values.len()
        )));
    }
    let scale = SymmetricScale::fit(values)?;
    let scaled: Vec<f64> = values.iter().map(|v| scale.scale(*v)).collect();
    let batch = lag_batch(&scaled, config.lags);

    let runs: Vec<Result<(NarnnNet, f64, Vec<f64>)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut net = NarnnNet::random(config.lags, config.hidden, derive_index_seed(config.seed, r));
            let history = train(&mut net, &batch, config.epochs, config.learning_rate)?;
            let final_loss = net.loss(&batch);
            if !final_loss.is_finite() {
                return Err(Error::Divergence { epoch: config.epochs });
            }
            Ok((net, final_loss, history))
        })
        .collect();

    let mut best: Option<(usize, NarnnNet, f64, Vec<f64>)> = None;
    let mut first_err = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok((net, loss, history)) => {
                if best.as_ref().is_none_or(|b| loss < b.2) {
                    best = Some((r, net, loss, history));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let (restart, net, final_loss, loss_history) = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or(Error::Divergence { epoch: 0 })),
    };
    Ok(NarnnModel {
        net,
        scale,
        config: *config,
        restart,
        final_loss,
        loss_history,
    })
}

/// Trains `config.restarts` networks from derived seeds and keeps the one
/// with the lowest final loss (earliest restart on ties).
pub fn narnn_fit(residuals: &TimeSeries, config: &NarnnConfig) -> Result<NarnnModel> {
    fit_values(residuals.values(), config)
}

impl NarnnModel {
    /// One-step prediction from a window in time order (oldest first).
    pub fn predict_next(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.config.lags {
            return Err(Error::Shape(format!(
                "seed window has {} values, model expects {}",
                window.len(),
                self.config.lags
            )));
        }
        let x: Vec<f64> = window.iter().rev().map(|v| self.scale.scale(*v)).collect();
        Ok(self.scale.unscale(self.net.forward(&x)))
    }

    /// Closed-loop forecast: each prediction is fed back as the newest lag.
    pub fn forecast(&self, seed_window: &[f64], h: usize) -> Result<Vec<f64>> {
        let mut window = seed_window.to_vec();
        self.predict_next(&window)?;
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let next = self.predict_next(&window)?;
            out.push(next);
            window.remove(0);
            window.push(next);
        }
        Ok(out)
    }

    /// MSE of scaled-unit predictions on the training pairs.
    pub fn training_loss(&self, residuals: &[f64]) -> f64 {
        let scaled: Vec<f64> = residuals.iter().map(|v| self.scale.scale(*v)).collect();
        self.net.loss(&lag_batch(&scaled, self.config.lags))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn narnn_forecast(model: &NarnnModel, seed_window: &[f64], h: usize) -> Result<Vec<f64>> {
    model.forecast(seed_window, h)
}

/// Chooses the lag count among `candidates` by one-step MSE on the last
/// `validation` points (fitting on the rest), then refits on everything.
/// Ties go to the earlier candidate.
pub fn select_lags(
    residuals: &TimeSeries,
    config: &NarnnConfig,
    candidates: &[usize],
    validation: usize,
) -> Result<NarnnModel> {
    let values = residuals.values();
    if candidates.is_empty() {
        return Err(Error::InvalidParams("no lag candidates".into()));
    }
    if candidates.len() == 1 || values.len() <= validation {
        let cfg = NarnnConfig {
            lags: candidates[0],
            ..*config
        };
        return fit_values(values, &cfg);
    }
    let cut = values.len() - validation;
    let mut best: Option<(usize, f64)> = None;
    let mut first_err = None;
    for &lags in candidates {
        let cfg = NarnnConfig { lags, ..*config };
        let model = match fit_values(&values[..cut], &cfg) {
            Ok(m) => m,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        let mut sse = 0.0;
        for t in cut..values.len() {
            let p = model.predict_next(&values[t - lags..t])?;
            sse += (values[t] - p).powi(2);
        }
        let mse = sse / validation as f64;
        if best.is_none_or(|b| mse < b.1) {
            best = Some((lags, mse));
        }
    }
    match best {
        Some((lags, _)) => fit_values(values, &NarnnConfig { lags, ..*config }),
        None => Err(first_err.expect("at least one candidate was tried")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::grad_check_detail;

    #[test]
    fn lag_order_most_recent_first() {
        let b = lag_batch(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(b.inputs[0], vec![2.0, 1.0]);
        assert_eq!(b.targets, vec![3.0, 4.0]);
    }

    #[test]
    fn zero_net_outputs_bias() {
        let mut net = NarnnNet::zeros(3, 4);
        net.b2 = 0.25;
        let model = NarnnModel {
            net,
            scale: SymmetricScale { max_abs: 8.0 },
            config: NarnnConfig {
                lags: 3,
                hidden: 4,
                ..NarnnConfig::default()
            },
            restart: 0,
            final_loss: 0.0,
            loss_history: vec![],
        };
        let f = model.forecast(&[1.0, -2.0, 3.0], 4).unwrap();
        assert_eq!(f, vec![2.0; 4]);
        assert!(matches!(model.forecast(&[1.0], 1), Err(Error::Shape(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = NarnnNet::random(3, 4, 11);
        let mut net = net;
        net.b1 = vec![0.1, -0.2, 0.05, 0.3];
        net.b2 = -0.1;
        let values: Vec<f64> = (0..20).map(|i| ((i as f64) * 0.7).sin() * 0.8).collect();
        let c = grad_check_detail(&net, &lag_batch(&values, 3), 1e-5);
        assert!(c.max_relative < 1e-5, "{c:?}");
    }

    #[test]
    fn config_validation() {
        assert!(NarnnConfig {
            lags: 0,
            ..NarnnConfig::default()
        }
        .validate()
        .is_err());
    }
}
