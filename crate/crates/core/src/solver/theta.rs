use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};

/// Closed-form minimizer of `-log det T + tr(S T) + rho/2 ||T - Z + U||_F^2`.
///
/// With `rho (Z - U) - S = Q D Q^T`, the minimizer is `Q D~ Q^T` where
/// `D~_ii = (d_i + sqrt(d_i^2 + 4 rho)) / (2 rho) > 0`, so the result is always
/// positive definite.
pub fn theta_update(z: &SymMatrix, u: &SymMatrix, s: &SymMatrix, rho1: f64) -> Result<SymMatrix> {
    if !(rho1 > 0.0) {
        return Err(Error::invalid("rho1 must be positive"));
    }
    let p = s.dim();
    if z.dim() != p || u.dim() != p {
        return Err(Error::invalid(format!(
            "dimension mismatch: S is {p}x{p}, Z is {0}x{0}, U is {1}x{1}",
            z.dim(),
            u.dim()
        )));
    }
    let a = SymMatrix::from_fn(p, |i, j| rho1 * (z.get(i, j) - u.get(i, j)) - s.get(i, j));
    let (q, d) = sym_eigen(&a)?;
    let shrunk = d.map(|di| eigen_map(di, rho1));
    let mut scaled = q.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(shrunk.iter()) {
        col *= w;
    }
    let theta: DMatrix<f64> = scaled * q.transpose();
    Ok(SymMatrix::from_fn(p, |i, j| 0.5 * (theta[(i, j)] + theta[(j, i)])))
}

/// `(d + sqrt(d^2 + 4 rho)) / (2 rho)`, rearranged for negative `d` to avoid cancellation.
#[inline]
fn eigen_map(d: f64, rho: f64) -> f64 {
    let root = (d * d + 4.0 * rho).sqrt();
    if d >= 0.0 {
        (d + root) / (2.0 * rho)
    } else {
        2.0 / (root - d)
    }
}
