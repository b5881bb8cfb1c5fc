use hybridcast::arima::{
    self, conditional_sum_of_squares, hannan_rissanen, select_and_fit, simulate, ArimaOptions,
    ArimaOrder, ArimaParams, OrderGrid,
};
use hybridcast::series::difference_values;
use proptest::prelude::*;

fn ar1(phi: f64) -> ArimaParams {
    ArimaParams {
        phi: vec![phi],
        theta: vec![],
        intercept: 0.0,
        sigma2: 1.0,
    }
}

/// Independent oracle: OLS slope of y_t on (1, y_{t-1}).
fn ols_lag1(y: &[f64]) -> f64 {
    let x = &y[..y.len() - 1];
    let z = &y[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let sxz: f64 = x.iter().zip(z).map(|(a, b)| (a - mx) * (b - mz)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxz / sxx
}

#[test]
fn ar1_recovery_matches_ols_oracle() {
    let s = simulate(ArimaOrder::new(1, 0, 0), &ar1(0.7), 500, 42).unwrap();
    let m = arima::fit(&s, ArimaOrder::new(1, 0, 0)).unwrap();
    let phi = m.params.phi[0];
    assert!((0.60..=0.80).contains(&phi), "phi = {phi}");
    let oracle = ols_lag1(s.values());
    assert!((phi - oracle).abs() < 0.02, "css {phi} vs ols {oracle}");
}

#[test]
fn ar1_recovery_across_seeds() {
    for seed in 0..20 {
        let s = simulate(ArimaOrder::new(1, 0, 0), &ar1(0.7), 500, 1000 + seed).unwrap();
        let m = arima::fit(&s, ArimaOrder::new(1, 0, 0)).unwrap();
        assert!((m.params.phi[0] - 0.7).abs() < 0.1, "seed {seed}: {}", m.params.phi[0]);
    }
}

#[test]
fn simulate_is_deterministic() {
    let p = ArimaParams {
        phi: vec![0.5],
        theta: vec![0.3],
        intercept: 1.0,
        sigma2: 2.0,
    };
    let a = simulate(ArimaOrder::new(1, 1, 1), &p, 100, 7).unwrap();
    let b = simulate(ArimaOrder::new(1, 1, 1), &p, 100, 7).unwrap();
    assert_eq!(a, b);
}

#[test]
fn white_noise_moments() {
    let p = ArimaParams {
        phi: vec![],
        theta: vec![],
        intercept: 0.0,
        sigma2: 1.0,
    };
    let s = simulate(ArimaOrder::new(0, 0, 0), &p, 10_000, 3).unwrap();
    let v = s.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() <= 0.05, "mean {mean}");
    assert!((0.9..=1.1).contains(&var), "var {var}");
}

#[test]
fn ar1_lag1_autocorrelation() {
    let s = simulate(ArimaOrder::new(1, 0, 0), &ar1(0.7), 10_000, 11).unwrap();
    let v = s.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let c0: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let c1: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let acf1 = c1 / c0;
    assert!((0.65..=0.75).contains(&acf1), "acf1 {acf1}");
}

#[test]
fn explosive_simulation_rejected() {
    let r = simulate(ArimaOrder::new(1, 0, 0), &ar1(1.05), 10, 1);
    assert!(matches!(r, Err(hybridcast::Error::InvalidParams(_))));
}

#[test]
fn white_noise_selects_sparse_order() {
    let p = ArimaParams {
        phi: vec![],
        theta: vec![],
        intercept: 0.0,
        sigma2: 1.0,
    };
    let s = simulate(ArimaOrder::new(0, 0, 0), &p, 300, 5).unwrap();
    let grid = OrderGrid::default();
    let best = select_and_fit(&s, &grid, &ArimaOptions::default()).unwrap();
    let from = grid.common_start();
    assert!(best.order.p + best.order.q <= 1, "selected {}", best.order);
    // recompute: no richer candidate improves on the winner
    for order in grid.orders() {
        if let Ok(m) = arima::fit(&s, order) {
            assert!(m.aicc_from(from) >= best.aicc_from(from), "{order} beats the selection");
        }
    }
    let again = select_and_fit(&s, &grid, &ArimaOptions::default()).unwrap();
    assert_eq!(again.order, best.order);
    assert_eq!(again.params, best.params);
}

#[test]
fn css_not_worse_than_hannan_rissanen_start() {
    let p = ArimaParams {
        phi: vec![0.6, -0.2],
        theta: vec![0.4],
        intercept: 0.5,
        sigma2: 1.0,
    };
    for seed in 0..5 {
        let s = simulate(ArimaOrder::new(2, 1, 1), &p, 250, seed).unwrap();
        let order = ArimaOrder::new(2, 1, 1);
        let m = arima::fit(&s, order).unwrap();
        let (w, _) = difference_values(s.values(), 1).unwrap();
        let x0 = hannan_rissanen(&w, 2, 1, true);
        let start = conditional_sum_of_squares(&w, x0[0], &x0[1..3], &x0[3..]);
        assert!(m.css <= start + 1e-9 * start.abs(), "seed {seed}: {} > {start}", m.css);
    }
}

#[test]
fn interval_width_non_decreasing() {
    let p = ArimaParams {
        phi: vec![0.4],
        theta: vec![0.3],
        intercept: 0.0,
        sigma2: 1.0,
    };
    let s = simulate(ArimaOrder::new(1, 1, 1), &p, 200, 9).unwrap();
    let m = arima::fit(&s, ArimaOrder::new(1, 1, 1)).unwrap();
    let w = m.forecast(20).unwrap().widths();
    assert!(w.windows(2).all(|p| p[1] >= p[0] - 1e-12), "{w:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn in_sample_identity(seed in 0u64..1000, p in 0usize..3, d in 0usize..3, q in 0usize..3) {
        let params = ArimaParams {
            phi: vec![0.2; p],
            theta: vec![0.1; q],
            intercept: 0.3,
            sigma2: 4.0,
        };
        let s = simulate(ArimaOrder::new(p, d, q), &params, 80, seed).unwrap();
        let m = arima::fit(&s, ArimaOrder::new(p, d, q)).unwrap();
        let obs = &s.values()[p + d..];
        prop_assert_eq!(m.fitted.len(), obs.len());
        for ((f, r), o) in m.fitted.iter().zip(&m.residuals).zip(obs) {
            let tol = 4.0 * f64::EPSILON * o.abs().max(f.abs());
            prop_assert!((f + r - o).abs() <= tol, "{} + {} != {}", f, r, o);
        }
        let resid = m.residual_series();
        prop_assert_eq!(resid.start(), s.date_at(p + d));
    }
}
