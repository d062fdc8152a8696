//! Moore-Penrose pseudo-inverse through a spectral decomposition.
//!
//! Singular values at or below `rtol * sigma_max` are treated as zero. For
//! symmetric input the symmetric eigendecomposition is used: with
//! `M = V diag(lambda) V^T` the singular values are `|lambda|` and
//! `M+ = V diag(1/lambda) V^T` over the retained eigenvalues, which is both
//! cheaper than a general SVD and exactly symmetric in structure. General
//! matrices go through a symmetric augmentation (`general_pinv`).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used when the caller has no preference.
pub const DEFAULT_RTOL: f64 = 1e-10;

pub fn moore_penrose_pinv(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    if !(rtol > 0.0 && rtol.is_finite()) {
        return Err(Error::Parameter(format!(
            "rtol must be positive, got {rtol}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    if m.is_empty() {
        return Ok(DMatrix::zeros(m.ncols(), m.nrows()));
    }
    if m.is_square() && is_exactly_symmetric(m) {
        Ok(symmetric_pinv(m, rtol))
    } else {
        general_pinv(m, rtol)
    }
}

fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (j + 1..n).all(|i| m[(i, j)] == m[(j, i)]))
}

fn symmetric_pinv(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let sigma_max = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let cutoff = rtol * sigma_max;
    let n = m.nrows();

    // Scale each retained eigenvector column by 1/lambda, then multiply back.
    let vectors = &eig.eigenvectors;
    let mut scaled = vectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let factor = if lambda.abs() > cutoff {
            1.0 / lambda
        } else {
            0.0
        };
        scaled.column_mut(k).scale_mut(factor);
    }
    let mut out = DMatrix::zeros(n, n);
    out.gemm(1.0, &scaled, &vectors.transpose(), 0.0);
    out
}

/// Pinv of a general `m x n` matrix from the symmetric augmented matrix
/// `B = [[0, M], [M^T, 0]]`, whose eigenvalues are `+-sigma_i` (plus zeros)
/// and whose pinv is `[[0, (M+)^T], [M+, 0]]`. This keeps the same singular
/// values and cutoff as an SVD while relying only on the symmetric solver.
fn general_pinv(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    let (r, c) = m.shape();
    let mut b = DMatrix::zeros(r + c, r + c);
    b.view_mut((0, r), (r, c)).copy_from(m);
    b.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    let bp = symmetric_pinv(&b, rtol);
    Ok(bp.view((r, 0), (c, r)).into_owned())
}
