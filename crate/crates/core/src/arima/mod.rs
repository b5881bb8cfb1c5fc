//! Box-Jenkins ARIMA(p, d, q) fitted by conditional sum of squares.
//!
//! On the `d`-times differenced series `w` the model is
//!
//! ```text
//! w_t = c + phi_1 w_{t-1} + ... + phi_p w_{t-p} + e_t - theta_1 e_{t-1} - ... - theta_q e_{t-q}
//! ```
//!
//! Note the minus sign on the MA terms. `c` is the intercept (drift when `d = 1`).

mod poly;
mod select;
mod simulate;

use chrono::{Duration, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{check_horizon, ForecastResult};
use crate::linalg::least_squares;
use crate::optim::{nelder_mead_restarted, NelderMeadOptions};
use crate::series::{difference_values, DiffState, TimeSeries};

pub use poly::{integrated_ar, is_stable, psi_weights};
pub use select::{select_and_fit, select_order, OrderGrid};
pub use simulate::simulate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

impl std::str::FromStr for ArimaOrder {
    type Err = Error;

    /// Parses `p,d,q`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect();
        match parts.as_slice() {
            [Ok(p), Ok(d), Ok(q)] => Ok(Self::new(*p, *d, *q)),
            _ => Err(Error::InvalidParams(format!("expected `p,d,q`, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaParams {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
}

/// Whether the intercept is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Intercept {
    /// Estimated when `d <= 1`, fixed at zero for `d = 2` (a second-difference
    /// drift is a quadratic trend).
    #[default]
    Auto,
    Include,
    Exclude,
}

impl Intercept {
    fn resolve(self, d: usize) -> bool {
        match self {
            Intercept::Auto => d <= 1,
            Intercept::Include => true,
            Intercept::Exclude => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArimaOptions {
    pub intercept: Intercept,
    /// Observations required beyond `d + max(p, q)`.
    pub min_extra_obs: usize,
    pub max_iter: usize,
}

impl Default for ArimaOptions {
    fn default() -> Self {
        Self {
            intercept: Intercept::Auto,
            min_extra_obs: 20,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub name: String,
    pub order: ArimaOrder,
    pub params: ArimaParams,
    pub include_intercept: bool,
    pub diff_state: DiffState,
    /// Date of `fitted[0]` / `residuals[0]`.
    pub residual_start: NaiveDate,
    /// One-step in-sample predictions on the original scale.
    pub fitted: Vec<f64>,
    /// `observed - fitted` for the same dates.
    pub residuals: Vec<f64>,
    /// Last `max(p, q) + d` training observations.
    pub train_tail: Vec<f64>,
    pub last_date: NaiveDate,
    pub css: f64,
    pub n_effective: usize,
    pub aicc: f64,
}

pub fn fit(series: &TimeSeries, order: ArimaOrder) -> Result<ArimaModel> {
    fit_with(series, order, &ArimaOptions::default())
}

/// Parameter vector layout: `[c?] ++ phi ++ theta`.
struct Layout {
    intercept: bool,
    p: usize,
    q: usize,
}

impl Layout {
    fn len(&self) -> usize {
        usize::from(self.intercept) + self.p + self.q
    }

    fn split<'a>(&self, x: &'a [f64]) -> (f64, &'a [f64], &'a [f64]) {
        let off = usize::from(self.intercept);
        let c = if self.intercept { x[0] } else { 0.0 };
        (c, &x[off..off + self.p], &x[off + self.p..off + self.p + self.q])
    }
}

/// Innovations `e_t` for `t in p..w.len()` with zero pre-sample errors.
/// Returns the full-length vector (first `p` entries zero).
fn innovations(w: &[f64], c: f64, phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let p = phi.len();
    let mut e = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = c;
        for (i, ph) in phi.iter().enumerate() {
            pred += ph * w[t - 1 - i];
        }
        for (j, th) in theta.iter().enumerate() {
            if t > j {
                pred -= th * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

/// CSS objective on an already-differenced series.
pub fn conditional_sum_of_squares(w: &[f64], c: f64, phi: &[f64], theta: &[f64]) -> f64 {
    innovations(w, c, phi, theta)[phi.len()..]
        .iter()
        .map(|v| v * v)
        .sum()
}

/// Conditional sum of squares with a barrier outside the stationary and
/// invertible region.
fn objective(w: &[f64], layout: &Layout, x: &[f64]) -> f64 {
    let (c, phi, theta) = layout.split(x);
    if !is_stable(phi) || !is_invertible(theta) {
        return f64::INFINITY;
    }
    conditional_sum_of_squares(w, c, phi, theta)
}

/// MA roots must lie outside radius `MA_ROOT_MARGIN`. Near the unit circle
/// CSS happily pairs a sharp MA notch with a nearly cancelling AR root and
/// chases periodogram noise.
pub const MA_ROOT_MARGIN: f64 = 1.05;

pub fn is_invertible(theta: &[f64]) -> bool {
    roots_outside(theta, MA_ROOT_MARGIN)
}

/// True when every root of `1 - sum c_i B^i` has modulus above `radius`.
pub fn roots_outside(coefs: &[f64], radius: f64) -> bool {
    let scaled: Vec<f64> = coefs
        .iter()
        .enumerate()
        .map(|(i, v)| v * radius.powi(i as i32 + 1))
        .collect();
    is_stable(&scaled)
}

fn shrink_into_region(mut coefs: Vec<f64>, ok: fn(&[f64]) -> bool) -> Vec<f64> {
    let mut tries = 0;
    while !ok(&coefs) && tries < 200 {
        coefs.iter_mut().for_each(|v| *v *= 0.9);
        tries += 1;
    }
    if ok(&coefs) {
        coefs
    } else {
        vec![0.0; coefs.len()]
    }
}

/// Hannan-Rissanen starting values: a long autoregression supplies
/// innovation estimates, then `w_t` is regressed on its own lags and lagged
/// innovation estimates.
pub fn hannan_rissanen(w: &[f64], p: usize, q: usize, intercept: bool) -> Vec<f64> {
    let n = w.len();
    let mean = w.iter().sum::<f64>() / n.max(1) as f64;
    let fallback = || {
        let mut x = Vec::new();
        if intercept {
            x.push(mean);
        }
        x.extend(std::iter::repeat_n(0.0, p + q));
        x
    };

    let lagged = |t: usize, e: Option<&[f64]>| {
        let mut row = Vec::with_capacity(1 + p + q);
        if intercept {
            row.push(1.0);
        }
        row.extend((1..=p).map(|i| w[t - i]));
        if let Some(e) = e {
            row.extend((1..=q).map(|j| e[t - j]));
        }
        row
    };

    if p == 0 && q == 0 {
        return fallback();
    }
    let est = if q == 0 {
        let rows: Vec<Vec<f64>> = (p..n).map(|t| lagged(t, None)).collect();
        if rows.first().is_some_and(|r| r.is_empty()) {
            return fallback();
        }
        least_squares(&rows, &w[p..])
    } else {
        let m = ((10.0 * (n as f64).log10()).floor() as usize)
            .max(p + q + 1)
            .min(n / 4);
        if m == 0 || n < m + q + p + 2 {
            return fallback();
        }
        let long_rows: Vec<Vec<f64>> = (m..n)
            .map(|t| {
                std::iter::once(1.0)
                    .chain((1..=m).map(|i| w[t - i]))
                    .collect()
            })
            .collect();
        let Some(long) = least_squares(&long_rows, &w[m..]) else {
            return fallback();
        };
        let mut e_hat = vec![0.0; n];
        for t in m..n {
            let pred: f64 = long[0] + (1..=m).map(|i| long[i] * w[t - i]).sum::<f64>();
            e_hat[t] = w[t] - pred;
        }
        let start = m + q.max(p);
        let rows: Vec<Vec<f64>> = (start..n).map(|t| lagged(t, Some(&e_hat))).collect();
        least_squares(&rows, &w[start..])
    };

    let Some(mut est) = est else {
        return fallback();
    };
    let off = usize::from(intercept);
    // regression coefficient on e_{t-j} is -theta_j
    for v in &mut est[off + p..] {
        *v = -*v;
    }
    let phi = shrink_into_region(est[off..off + p].to_vec(), is_stable);
    let theta = shrink_into_region(est[off + p..].to_vec(), is_invertible);
    let mut x = Vec::with_capacity(est.len());
    if intercept {
        x.push(est[0]);
    }
    x.extend(phi);
    x.extend(theta);
    x
}

/// Value of the original series at index `t + d` minus its `d`-th difference,
/// i.e. the part fixed by earlier observations.
fn integration_offset(y: &[f64], idx: usize, d: usize) -> f64 {
    // y_idx = w + sum_{k=1..d} (-1)^{k+1} C(d,k) y_{idx-k}
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 1..=d {
        binom = binom * (d - k + 1) as f64 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * binom * y[idx - k];
    }
    acc
}

pub fn fit_with(series: &TimeSeries, order: ArimaOrder, opts: &ArimaOptions) -> Result<ArimaModel> {
    let ArimaOrder { p, d, q } = order;
    let y = series.values();
    let need = d + p.max(q) + opts.min_extra_obs;
    if y.len() < need.max(d + p + 1) {
        return Err(Error::InsufficientData(format!(
            "ARIMA{order} needs at least {} observations, got {}",
            need.max(d + p + 1),
            y.len()
        )));
    }
    let (w, diff_state) = difference_values(y, d)?;
    let include_intercept = opts.intercept.resolve(d);
    let layout = Layout {
        intercept: include_intercept,
        p,
        q,
    };

    let x0 = hannan_rissanen(&w, p, q, include_intercept);
    // with no MA terms the CSS minimiser is the least-squares start itself
    let exact_start = q == 0 && is_stable(layout.split(&x0).1);
    let solution = if layout.len() == 0 || exact_start {
        x0
    } else {
        let sd = {
            let m = w.iter().sum::<f64>() / w.len() as f64;
            (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt()
        };
        let steps: Vec<f64> = (0..layout.len())
            .map(|i| {
                if include_intercept && i == 0 {
                    (0.1 * x0[0].abs()).max(0.1 * sd).max(1e-3)
                } else {
                    0.1
                }
            })
            .collect();
        let nm_opts = NelderMeadOptions {
            max_iter: opts.max_iter,
            ..NelderMeadOptions::default()
        };
        let start_obj = objective(&w, &layout, &x0);
        let min = nelder_mead_restarted(|x| objective(&w, &layout, x), &x0, &steps, nm_opts);
        if !min.converged || !min.fx.is_finite() {
            return Err(Error::Convergence {
                iterations: min.iterations,
                best_objective: min.fx,
                best_params: min.x,
            });
        }
        if start_obj.is_finite() && start_obj < min.fx {
            x0
        } else {
            min.x
        }
    };

    let (c, phi, theta) = layout.split(&solution);
    if !is_stable(phi) {
        warn!("ARIMA{order}: AR polynomial has a root on or inside the unit circle");
    }
    let e = innovations(&w, c, phi, theta);
    let n_eff = w.len() - p;
    let css_value: f64 = e[p..].iter().map(|v| v * v).sum();

    let mut fitted = Vec::with_capacity(n_eff);
    let mut residuals = Vec::with_capacity(n_eff);
    for t in p..w.len() {
        let idx = t + d;
        let w_hat = w[t] - e[t];
        let f = integration_offset(y, idx, d) + w_hat;
        fitted.push(f);
        residuals.push(y[idx] - f);
    }

    let sigma2 = (css_value / n_eff as f64).max(f64::MIN_POSITIVE);
    let aicc = gaussian_aicc(css_value, n_eff, layout.len() + 1);

    let tail_len = (p.max(q) + d).min(y.len());
    Ok(ArimaModel {
        name: series.name().to_string(),
        order,
        params: ArimaParams {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
            intercept: c,
            sigma2,
        },
        include_intercept,
        diff_state,
        residual_start: series.date_at(p + d),
        fitted,
        residuals,
        train_tail: y[y.len() - tail_len..].to_vec(),
        last_date: series.end(),
        css: css_value,
        n_effective: n_eff,
        aicc,
    })
}

/// AICc of a Gaussian model with `k` parameters (sigma2 included) whose
/// residual sum of squares over `n` points is `rss`.
pub fn gaussian_aicc(rss: f64, n: usize, k: usize) -> f64 {
    if n <= k + 1 {
        return f64::INFINITY;
    }
    let sigma2 = (rss / n as f64).max(f64::MIN_POSITIVE);
    n as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
        + 2.0 * k as f64
        + 2.0 * (k * (k + 1)) as f64 / (n - k - 1) as f64
}

impl ArimaModel {
    /// Number of estimated parameters, innovation variance included.
    pub fn n_params(&self) -> usize {
        self.order.p + self.order.q + usize::from(self.include_intercept) + 1
    }

    /// AICc scored only on residuals at original-series index `from` onward.
    /// Candidates with different `p + d` condition on different prefixes, so
    /// order selection compares them over a shared tail instead.
    pub fn aicc_from(&self, from: usize) -> f64 {
        let first = self.order.p + self.order.d;
        let skip = from.saturating_sub(first).min(self.residuals.len());
        let tail = &self.residuals[skip..];
        let rss: f64 = tail.iter().map(|e| e * e).sum();
        gaussian_aicc(rss, tail.len(), self.n_params())
    }

    /// Differenced-scale tail values (most recent last) needed for the AR recursion.
    fn differenced_tail(&self) -> Vec<f64> {
        if self.train_tail.len() <= self.order.d {
            return Vec::new();
        }
        let (w, _) = difference_values(&self.train_tail, self.order.d)
            .expect("train tail holds more than d values");
        w
    }

    /// Last value of each differencing level `0..d` (level 0 = original scale).
    fn level_anchors(&self) -> Vec<f64> {
        let mut anchors = Vec::with_capacity(self.order.d);
        let mut current = self.train_tail.clone();
        for _ in 0..self.order.d {
            anchors.push(*current.last().expect("non-empty tail"));
            current = current.windows(2).map(|w| w[1] - w[0]).collect();
        }
        anchors
    }

    /// Point forecasts on the differenced scale.
    fn forecast_differenced(&self, h: usize) -> Vec<f64> {
        let ArimaOrder { p, q, .. } = self.order;
        let ArimaParams {
            phi,
            theta,
            intercept,
            ..
        } = &self.params;
        let mut w_hist = self.differenced_tail();
        let e_tail: Vec<f64> = self.residuals[self.residuals.len().saturating_sub(q)..].to_vec();
        let mut e_hist: Vec<f64> = vec![0.0; q.saturating_sub(e_tail.len())];
        e_hist.extend(e_tail);
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let nw = w_hist.len();
            let ne = e_hist.len();
            let mut v = *intercept;
            for i in 0..p {
                v += phi[i] * w_hist[nw - 1 - i];
            }
            for j in 0..q {
                v -= theta[j] * e_hist[ne - 1 - j];
            }
            out.push(v);
            w_hist.push(v);
            e_hist.push(0.0);
        }
        out
    }

    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        check_horizon(h)?;
        let mut values = self.forecast_differenced(h);
        for anchor in self.level_anchors().into_iter().rev() {
            let mut acc = anchor;
            for v in values.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        let psi = psi_weights(&self.params.phi, &self.params.theta, self.order.d, h);
        let mut cum = 0.0;
        let sd: Vec<f64> = psi
            .iter()
            .map(|w| {
                cum += w * w;
                (self.params.sigma2 * cum).sqrt()
            })
            .collect();
        Ok(ForecastResult::from_sd(
            "arima",
            self.last_date + Duration::days(1),
            values,
            &sd,
        ))
    }

    /// In-sample residuals dated to their observations.
    pub fn residual_series(&self) -> TimeSeries {
        TimeSeries::new(
            format!("{} residuals", self.name),
            self.residual_start,
            self.residuals.clone(),
        )
        .expect("fit guarantees at least one residual")
    }

    pub fn fitted_series(&self) -> TimeSeries {
        TimeSeries::new(
            format!("{} fitted", self.name),
            self.residual_start,
            self.fitted.clone(),
        )
        .expect("fit guarantees at least one fitted value")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn forecast(model: &ArimaModel, h: usize) -> Result<ForecastResult> {
    model.forecast(h)
}

pub fn residual_series(model: &ArimaModel) -> TimeSeries {
    model.residual_series()
}
