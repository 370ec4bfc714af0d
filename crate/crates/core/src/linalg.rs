//! Tridiagonal solve with partial pivoting (the LAPACK `gtsv` elimination).

use crate::error::{Error, Result};

/// Solves `T x = rhs` where `T` has sub-diagonal `lower` (len n−1),
/// diagonal `diag` (len n) and super-diagonal `upper` (len n−1).
/// The inputs are consumed as workspace.
pub fn solve_tridiagonal(
    mut lower: Vec<f64>,
    mut diag: Vec<f64>,
    mut upper: Vec<f64>,
    mut rhs: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::InvalidArgument("tridiagonal band lengths do not match".into()));
    }
    // Second super-diagonal fill produced by row interchanges.
    let mut fill = vec![0.0; n.saturating_sub(2)];
    for i in 0..n - 1 {
        if diag[i].abs() >= lower[i].abs() {
            if diag[i] == 0.0 {
                return Err(Error::SingularJacobian(i));
            }
            let fact = lower[i] / diag[i];
            diag[i + 1] -= fact * upper[i];
            rhs[i + 1] -= fact * rhs[i];
        } else {
            let fact = diag[i] / lower[i];
            diag[i] = lower[i];
            let temp = diag[i + 1];
            diag[i + 1] = upper[i] - fact * temp;
            if i + 2 < n {
                fill[i] = upper[i + 1];
                upper[i + 1] = -fact * fill[i];
            }
            upper[i] = temp;
            let temp = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = temp - fact * rhs[i + 1];
        }
        lower[i] = 0.0;
    }
    if diag[n - 1] == 0.0 {
        return Err(Error::SingularJacobian(n - 1));
    }
    rhs[n - 1] /= diag[n - 1];
    if n > 1 {
        rhs[n - 2] = (rhs[n - 2] - upper[n - 2] * rhs[n - 1]) / diag[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1] - fill[i] * rhs[i + 2]) / diag[i];
    }
    if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(rhs)
}
