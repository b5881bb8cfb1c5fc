//! Lag-polynomial helpers. Polynomials are written `1 - c_1 B - ... - c_k B^k`
//! and passed as `[c_1, ..., c_k]`.

/// True when every root of `1 - sum c_i B^i` lies strictly outside the unit
/// circle. Uses the Durbin-Levinson step-down recursion: the polynomial is
/// stable iff every reflection coefficient has magnitude below one.
pub fn is_stable(coefs: &[f64]) -> bool {
    let mut a: Vec<f64> = coefs.to_vec();
    while let Some(&last) = a.last() {
        if last == 0.0 {
            a.pop();
        } else {
            break;
        }
    }
    for k in (1..=a.len()).rev() {
        let r = a[k - 1];
        if !r.is_finite() || r.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - r * r;
        let next: Vec<f64> = (1..k).map(|i| (a[i - 1] + r * a[k - i - 1]) / denom).collect();
        a = next;
    }
    true
}

/// Coefficients of `(1 - sum phi_i B^i)(1 - B)^d` in the same `[c_1..]` convention.
pub fn integrated_ar(phi: &[f64], d: usize) -> Vec<f64> {
    // full polynomial with leading 1
    let mut poly: Vec<f64> = std::iter::once(1.0).chain(phi.iter().map(|v| -v)).collect();
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    poly[1..].iter().map(|v| -v).collect()
}

/// MA(infinity) weights psi_0..psi_{h-1} of an ARIMA process whose MA
/// polynomial is `1 - sum theta_j B^j`.
pub fn psi_weights(phi: &[f64], theta: &[f64], d: usize, h: usize) -> Vec<f64> {
    let ar = integrated_ar(phi, d);
    let mut psi = Vec::with_capacity(h);
    for j in 0..h {
        if j == 0 {
            psi.push(1.0);
            continue;
        }
        let mut v = -theta.get(j - 1).copied().unwrap_or(0.0);
        for i in 1..=j.min(ar.len()) {
            v += ar[i - 1] * psi[j - i];
        }
        psi.push(v);
    }
    psi
}
