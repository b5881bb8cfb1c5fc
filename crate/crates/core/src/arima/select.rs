use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_with, ArimaModel, ArimaOptions, ArimaOrder};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Inclusive upper bounds of the order search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderGrid {
    pub max_p: usize,
    pub max_d: usize,
    pub max_q: usize,
}

impl Default for OrderGrid {
    fn default() -> Self {
        Self {
            max_p: 5,
            max_d: 2,
            max_q: 5,
        }
    }
}

impl OrderGrid {
    pub fn orders(&self) -> Vec<ArimaOrder> {
        let mut out = Vec::new();
        for d in 0..=self.max_d {
            for p in 0..=self.max_p {
                for q in 0..=self.max_q {
                    out.push(ArimaOrder::new(p, d, q));
                }
            }
        }
        out
    }
}

/// Lower AICc wins; exact ties go to smaller p+q, then smaller p, then smaller d.
pub(crate) fn compare_candidates(a: (ArimaOrder, f64), b: (ArimaOrder, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then((a.0.p + a.0.q).cmp(&(b.0.p + b.0.q)))
        .then(a.0.p.cmp(&b.0.p))
        .then(a.0.d.cmp(&b.0.d))
        .then(a.0.q.cmp(&b.0.q))
}

impl OrderGrid {
    /// First original-series index scored during selection.
    pub fn common_start(&self) -> usize {
        self.max_p + self.max_d
    }
}

/// Fits every grid cell (in parallel) and returns the AICc-best model.
/// AICc is evaluated on residuals from [`OrderGrid::common_start`] onward so
/// that every candidate is scored on the same observations.
pub fn select_and_fit(series: &TimeSeries, grid: &OrderGrid, opts: &ArimaOptions) -> Result<ArimaModel> {
    let from = grid.common_start();
    let fits: Vec<(ArimaOrder, Result<ArimaModel>)> = grid
        .orders()
        .into_par_iter()
        .map(|order| (order, fit_with(series, order, opts)))
        .collect();
    let mut failures = Vec::new();
    let mut best: Option<(ArimaModel, f64)> = None;
    for (order, fitted) in fits {
        match fitted {
            Ok(m) if m.aicc_from(from) < f64::INFINITY => {
                let score = m.aicc_from(from);
                let better = match &best {
                    None => true,
                    Some((b, bs)) => compare_candidates((m.order, score), (b.order, *bs)) == Ordering::Less,
                };
                if better {
                    best = Some((m, score));
                }
            }
            Ok(_) => failures.push(format!("{order}: AICc undefined")),
            Err(e) => failures.push(format!("{order}: {e}")),
        }
    }
    best.map(|(m, _)| m).ok_or_else(|| {
        Error::NoViableModel(format!(
            "all {} candidate orders failed; first: {}",
            failures.len(),
            failures.first().map(String::as_str).unwrap_or("none")
        ))
    })
}

pub fn select_order(series: &TimeSeries, grid: &OrderGrid, opts: &ArimaOptions) -> Result<ArimaOrder> {
    select_and_fit(series, grid, opts).map(|m| m.order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_break_prefers_smaller_p() {
        let a = (ArimaOrder::new(1, 1, 0), 10.0);
        let b = (ArimaOrder::new(0, 1, 1), 10.0);
        assert_eq!(compare_candidates(b, a), Ordering::Less);
        let c = (ArimaOrder::new(0, 0, 1), 10.0);
        assert_eq!(compare_candidates(c, b), Ordering::Less);
        let richer = (ArimaOrder::new(0, 0, 0), 10.0);
        assert_eq!(compare_candidates(richer, c), Ordering::Less);
        let better_score = (ArimaOrder::new(3, 2, 3), 9.0);
        assert_eq!(compare_candidates(better_score, richer), Ordering::Less);
    }

    #[test]
    fn grid_size() {
        assert_eq!(OrderGrid::default().orders().len(), 6 * 3 * 6);
    }
}
