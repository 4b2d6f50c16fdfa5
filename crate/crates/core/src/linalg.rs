//! Small dense helpers on top of faer.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Lower-triangular Toeplitz matrix with entry `(j, k) = symbol[j − k]`.
pub fn toeplitz_lower(symbol: &[c64], dim: usize) -> Mat<c64> {
    Mat::from_fn(dim, dim, |j, k| {
        if j >= k {
            symbol.get(j - k).copied().unwrap_or_default()
        } else {
            c64::default()
        }
    })
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Operator 2-norm.
pub fn spectral_norm(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// `‖a − b‖₂`.
pub fn distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<f64> {
    spectral_norm((a - b).as_ref())
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::identity(n, n)
}

/// `‖aᴴa − I‖₂`.
pub fn isometry_defect(a: MatRef<'_, c64>) -> Result<f64> {
    let gram = a.adjoint() * a;
    distance(gram.as_ref(), identity(a.ncols()).as_ref())
}

/// `U f(Λ) U⁻¹` from the (non-symmetric) eigendecomposition of a small matrix.
pub fn eigen_apply(
    a: MatRef<'_, c64>,
    f: impl Fn(c64) -> Result<c64>,
) -> Result<(Mat<c64>, Vec<c64>)> {
    let eig = a
        .eigen()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let n = a.nrows();
    let values: Vec<c64> = (0..n).map(|i| eig.S().column_vector()[i]).collect();
    let mapped = values.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
    let u = eig.U().to_owned();
    let u_inv = u.partial_piv_lu().inverse();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * mapped[j]);
    Ok((&scaled * &u_inv, values))
}

/// Orthonormal basis of the range of `a`, keeping singular values above `tol`.
pub fn range_basis(a: MatRef<'_, c64>, tol: f64) -> Result<Mat<c64>> {
    if a.ncols() == 0 {
        return Ok(Mat::zeros(a.nrows(), 0));
    }
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let rank = (0..s.nrows()).take_while(|&i| s[i].re > tol).count();
    Ok(svd.U().subcols(0, rank).to_owned())
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal matrices; 1 when the dimensions differ.
pub fn subspace_sine(q1: MatRef<'_, c64>, q2: MatRef<'_, c64>) -> Result<f64> {
    if q1.ncols() != q2.ncols() {
        return Ok(1.0);
    }
    if q1.ncols() == 0 {
        return Ok(0.0);
    }
    let r1 = q2 - q1 * (q1.adjoint() * q2);
    let r2 = q1 - q2 * (q2.adjoint() * q1);
    Ok(spectral_norm(r1.as_ref())?
        .max(spectral_norm(r2.as_ref())?)
        .min(1.0))
}
