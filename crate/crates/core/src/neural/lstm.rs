//! Single-layer LSTM over `[h_{t-1}, x_t]` with a linear read-out of the
//! final hidden state.
//!
//! ```text
//! f = sigmoid(W_f z + b_f)    i = sigmoid(W_i z + b_i)
//! g = tanh(W_c z + b_c)       o = sigmoid(W_o z + b_o)
//! c = f * c_prev + i * g      h = o * tanh(c)
//! ```

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{glorot, sigmoid, train, Batch, Differentiable};
use crate::error::{Error, Result};
use crate::forecast::{check_horizon, ForecastResult};
use crate::series::{ScaleState, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub window: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            window: 5,
            hidden: 16,
            epochs: 300,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "LSTM needs window, hidden >= 1 and a positive learning rate, got window {}, hidden {}, rate {}",
                self.window, self.hidden, self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet {
    pub input: usize,
    pub hidden: usize,
    /// Each gate matrix is `hidden x (hidden + input)`, row-major, with the
    /// previous hidden state in the first `hidden` columns.
    pub w_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub b_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_o: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

/// Every intermediate of one cell step.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmNet {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = hidden * (hidden + input);
        Self {
            input,
            hidden,
            w_f: vec![0.0; m],
            b_f: vec![0.0; hidden],
            w_i: vec![0.0; m],
            b_i: vec![0.0; hidden],
            w_c: vec![0.0; m],
            b_c: vec![0.0; hidden],
            w_o: vec![0.0; m],
            b_o: vec![0.0; hidden],
            w_out: vec![0.0; hidden],
            b_out: 0.0,
        }
    }

    pub fn random(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = hidden * (hidden + input);
        let fan_in = hidden + input;
        let mut net = Self::zeros(input, hidden);
        net.w_f = glorot(&mut rng, m, fan_in, hidden);
        net.w_i = glorot(&mut rng, m, fan_in, hidden);
        net.w_c = glorot(&mut rng, m, fan_in, hidden);
        net.w_o = glorot(&mut rng, m, fan_in, hidden);
        net.w_out = glorot(&mut rng, hidden, hidden, 1);
        net
    }

    fn cols(&self) -> usize {
        self.hidden + self.input
    }

    fn affine(&self, w: &[f64], b: &[f64], z: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        (0..self.hidden)
            .map(|r| b[r] + w[r * cols..(r + 1) * cols].iter().zip(z).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    /// One step, returning every gate.
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<Gates> {
        if x.len() != self.input || h_prev.len() != self.hidden || c_prev.len() != self.hidden {
            return Err(Error::Shape(format!(
                "cell expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
                self.input,
                self.hidden,
                self.hidden,
                x.len(),
                h_prev.len(),
                c_prev.len()
            )));
        }
        Ok(self.step_unchecked(x, h_prev, c_prev))
    }

    fn step_unchecked(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Gates {
        let z: Vec<f64> = h_prev.iter().chain(x).copied().collect();
        let f: Vec<f64> = self.affine(&self.w_f, &self.b_f, &z).into_iter().map(sigmoid).collect();
        let i: Vec<f64> = self.affine(&self.w_i, &self.b_i, &z).into_iter().map(sigmoid).collect();
        let g: Vec<f64> = self.affine(&self.w_c, &self.b_c, &z).into_iter().map(f64::tanh).collect();
        let o: Vec<f64> = self.affine(&self.w_o, &self.b_o, &z).into_iter().map(sigmoid).collect();
        let c: Vec<f64> = (0..self.hidden).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let h: Vec<f64> = (0..self.hidden).map(|k| o[k] * c[k].tanh()).collect();
        Gates { f, i, g, o, c, h }
    }

    /// Runs a sequence of scalar inputs from zero state and reads out the last hidden state.
    pub fn predict(&self, seq: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        let mut c = vec![0.0; self.hidden];
        for x in seq {
            let s = self.step_unchecked(std::slice::from_ref(x), &h, &c);
            h = s.h;
            c = s.c;
        }
        self.b_out + self.w_out.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// One LSTM step: `(h, c)` from input, previous hidden and previous cell state.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], net: &LstmNet) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = net.step(x, h_prev, c_prev)?;
    Ok((s.h, s.c))
}

impl Differentiable for LstmNet {
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for (w, b) in [
            (&self.w_f, &self.b_f),
            (&self.w_i, &self.b_i),
            (&self.w_c, &self.b_c),
            (&self.w_o, &self.b_o),
        ] {
            p.extend_from_slice(w);
            p.extend_from_slice(b);
        }
        p.extend_from_slice(&self.w_out);
        p.push(self.b_out);
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let m = self.w_f.len();
        let h = self.hidden;
        let mut rest = p;
        for (w, b) in [
            (&mut self.w_f, &mut self.b_f),
            (&mut self.w_i, &mut self.b_i),
            (&mut self.w_c, &mut self.b_c),
            (&mut self.w_o, &mut self.b_o),
        ] {
            w.copy_from_slice(&rest[..m]);
            b.copy_from_slice(&rest[m..m + h]);
            rest = &rest[m + h..];
        }
        self.w_out.copy_from_slice(&rest[..h]);
        self.b_out = rest[h];
    }

    /// MSE of the read-out after each input sequence, differentiated by
    /// backpropagation through time.
    fn loss_grad(&self, batch: &Batch) -> (f64, Vec<f64>) {
        let (hd, cols) = (self.hidden, self.cols());
        let m = hd * cols;
        let block = m + hd;
        let mut grad = vec![0.0; 4 * block + hd + 1];
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let weights = [&self.w_f, &self.w_i, &self.w_c, &self.w_o];

        for (seq, target) in batch.inputs.iter().zip(&batch.targets) {
            let steps = seq.len() / self.input.max(1);
            let mut states: Vec<(Vec<f64>, Gates)> = Vec::with_capacity(steps);
            let mut h = vec![0.0; hd];
            let mut c = vec![0.0; hd];
            for t in 0..steps {
                let x = &seq[t * self.input..(t + 1) * self.input];
                let z: Vec<f64> = h.iter().chain(x).copied().collect();
                let s = self.step_unchecked(x, &h, &c);
                h = s.h.clone();
                c = s.c.clone();
                states.push((z, s));
            }
            let y = self.b_out + self.w_out.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>();
            let err = y - target;
            loss += err * err;
            let d = 2.0 * err / n;
            for k in 0..hd {
                grad[4 * block + k] += d * h[k];
            }
            grad[4 * block + hd] += d;

            let mut dh: Vec<f64> = self.w_out.iter().map(|w| d * w).collect();
            let mut dc = vec![0.0; hd];
            for t in (0..steps).rev() {
                let (z, s) = &states[t];
                let c_prev: &[f64] = if t == 0 { &[] } else { &states[t - 1].1.c };
                let mut pre = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
                for k in 0..hd {
                    let tc = s.c[k].tanh();
                    let d_o = dh[k] * tc;
                    dc[k] += dh[k] * s.o[k] * (1.0 - tc * tc);
                    let cp = c_prev.get(k).copied().unwrap_or(0.0);
                    pre[0][k] = dc[k] * cp * s.f[k] * (1.0 - s.f[k]);
                    pre[1][k] = dc[k] * s.g[k] * s.i[k] * (1.0 - s.i[k]);
                    pre[2][k] = dc[k] * s.i[k] * (1.0 - s.g[k] * s.g[k]);
                    pre[3][k] = d_o * s.o[k] * (1.0 - s.o[k]);
                    dc[k] *= s.f[k];
                }
                let mut dz = vec![0.0; cols];
                for (gate, (w, da)) in weights.iter().zip(&pre).enumerate() {
                    let off = gate * block;
                    for r in 0..hd {
                        let a = da[r];
                        if a == 0.0 {
                            continue;
                        }
                        let row = r * cols;
                        for (col, zv) in z.iter().enumerate() {
                            grad[off + row + col] += a * zv;
                            dz[col] += w[row + col] * a;
                        }
                        grad[off + m + r] += a;
                    }
                }
                dh = dz[..hd].to_vec();
            }
        }
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub name: String,
    pub net: LstmNet,
    pub scale: ScaleState,
    pub config: LstmConfig,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    /// RMS of in-sample one-step errors on the original scale.
    pub sigma: f64,
    /// Last `window` training values, scaled, oldest first.
    pub last_window: Vec<f64>,
    pub last_date: NaiveDate,
}

/// Trains on min-max scaled sliding windows with next-value targets.
pub fn lstm_fit(series: &TimeSeries, config: &LstmConfig) -> Result<LstmModel> {
    config.validate()?;
    let y = series.values();
    if y.len() <= config.window + 10 {
        return Err(Error::InsufficientData(format!(
            "LSTM with window {} needs more than {} observations, got {}",
            config.window,
            config.window + 10,
            y.len()
        )));
    }
    let scale = ScaleState::fit(y)?;
    let scaled: Vec<f64> = y.iter().map(|v| scale.scale(*v)).collect();
    let batch = Batch::windows(&scaled, config.window);
    let mut net = LstmNet::random(1, config.hidden, config.seed);
    let loss_history = train(&mut net, &batch, config.epochs, config.learning_rate)?;
    let final_loss = net.loss(&batch);
    if !final_loss.is_finite() {
        return Err(Error::Divergence { epoch: config.epochs });
    }
    let sse: f64 = batch
        .inputs
        .iter()
        .zip(&y[config.window..])
        .map(|(x, obs)| (scale.unscale(net.predict(x)) - obs).powi(2))
        .sum();
    Ok(LstmModel {
        name: series.name().to_string(),
        net,
        scale,
        config: *config,
        final_loss,
        loss_history,
        sigma: (sse / batch.len() as f64).sqrt(),
        last_window: scaled[scaled.len() - config.window..].to_vec(),
        last_date: series.end(),
    })
}

impl LstmModel {
    /// Closed-loop point forecasts on the original scale.
    pub fn forecast_points(&self, h: usize) -> Vec<f64> {
        let mut window = self.last_window.clone();
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let next = self.net.predict(&window);
            out.push(self.scale.unscale(next));
            window.remove(0);
            window.push(next);
        }
        out
    }

    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        check_horizon(h)?;
        Ok(ForecastResult::with_sqrt_h_bounds(
            "lstm",
            self.last_date + Duration::days(1),
            self.forecast_points(h),
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

pub fn lstm_forecast(model: &LstmModel, h: usize) -> Result<ForecastResult> {
    model.forecast(h)
}
