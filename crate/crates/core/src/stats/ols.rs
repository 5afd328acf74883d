use nalgebra::{DMatrix, DVector};

use super::StatsError;

/// Ordinary least squares with heteroskedasticity-robust covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// White's HC0 covariance.
    pub cov_hc0: Vec<Vec<f64>>,
    /// HC0 scaled by n / (n - p).
    pub cov_hc1: Vec<Vec<f64>>,
}

/// Inverse of a symmetric positive-definite matrix, rejecting near-singular
/// input by the conditioning of its Cholesky factor.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    // Scale to unit diagonal so the rank test is unit-free.
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(StatsError::Singular);
    }
    let s = DVector::from_iterator(d.len(), d.iter().map(|v| 1.0 / v.sqrt()));
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s[i] * s[j]);
    let chol = scaled.cholesky().ok_or(StatsError::Singular)?;
    let l = chol.l();
    let min = (0..l.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min * min < 1e-12 {
        return Err(StatsError::Singular);
    }
    let inv = chol.inverse();
    Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| inv[(i, j)] * s[i] * s[j]))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Fits `y = X beta`. `x` is row-major with one row per observation.
pub fn ols_fit(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, StatsError> {
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    if n <= p || p == 0 {
        return Err(StatsError::DegenerateDesign(format!("{n} observations for {p} coefficients")));
    }
    let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx_inv = spd_inverse(&(xm.transpose() * &xm))?;
    let beta = &xtx_inv * (xm.transpose() * &yv);
    let resid = &yv - &xm * &beta;
    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let row = xm.row(i);
        meat += row.transpose() * row * resid[i].powi(2);
    }
    let hc0 = &xtx_inv * meat * &xtx_inv;
    let hc1 = &hc0 * (n as f64 / (n - p) as f64);
    Ok(OlsFit {
        beta: beta.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
        cov_hc0: to_rows(&hc0),
        cov_hc1: to_rows(&hc1),
    })
}
