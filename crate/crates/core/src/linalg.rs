use nalgebra::{DMatrix, DVector};

/// Ordinary least squares via SVD. `rows` are the regressor rows.
/// Returns `None` when there are fewer rows than columns or the fit is not finite.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let k = rows.first()?.len();
    if n < k || k == 0 || n != y.len() {
        return None;
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = x.svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
}

/// Solves the symmetric positive-definite system `a x = b` by Cholesky.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.cholesky()?;
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}
