use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{is_stable, ArimaOrder, ArimaParams};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

const BURN_IN: usize = 200;

/// Draws `n` observations of the ARIMA process with Gaussian innovations.
/// Integration starts from zero.
pub fn simulate(order: ArimaOrder, params: &ArimaParams, n: usize, seed: u64) -> Result<TimeSeries> {
    if params.phi.len() != order.p || params.theta.len() != order.q {
        return Err(Error::InvalidParams(format!(
            "order {order} does not match {} AR / {} MA coefficients",
            params.phi.len(),
            params.theta.len()
        )));
    }
    if !(params.sigma2 > 0.0) {
        return Err(Error::InvalidParams("sigma2 must be positive".into()));
    }
    if !is_stable(&params.phi) {
        return Err(Error::InvalidParams(
            "AR polynomial is explosive or on the unit circle".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InsufficientData("n must be at least 1".into()));
    }
    let normal = Normal::new(0.0, params.sigma2.sqrt())
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = BURN_IN + n;
    let mut w = vec![0.0; total];
    let mut e = vec![0.0; total];
    for t in 0..total {
        e[t] = normal.sample(&mut rng);
        let mut v = params.intercept + e[t];
        for (i, ph) in params.phi.iter().enumerate() {
            if t > i {
                v += ph * w[t - 1 - i];
            }
        }
        for (j, th) in params.theta.iter().enumerate() {
            if t > j {
                v -= th * e[t - 1 - j];
            }
        }
        w[t] = v;
    }
    let mut values = w.split_off(BURN_IN);
    for _ in 0..order.d {
        let mut acc = 0.0;
        for v in values.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    TimeSeries::new(
        "simulated",
        NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
        values,
    )
}
