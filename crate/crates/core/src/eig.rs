//! Dense complex nonsymmetric eigendecomposition built on the Schur form:
//! eigenvalues from the triangular factor, eigenvectors by back-substitution
//! lifted through the unitary factor.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Full eigendecomposition `A V = V diag(values)` of a dense complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors as columns, same order as `values`.
    pub vectors: DMatrix<C64>,
}

/// Eigenvalues only, unordered.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration failed to converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Full eigendecomposition. Eigenvectors of the triangular Schur factor are
/// found by back-substitution; clustered diagonal entries are regularized by
/// a tiny shift, which is harmless at the tolerances used downstream.
pub fn eigen(m: &DMatrix<C64>) -> Result<Eigen> {
    let n = m.nrows();
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration failed to converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let mut vectors = DMatrix::<C64>::zeros(n, n);
    let scale = t.camax().max(1.0);
    for (i, &lambda) in values.iter().enumerate() {
        let mut y = vec![C64::default(); n];
        y[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::default();
            for k in j + 1..=i {
                s += t[(j, k)] * y[k];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < 1e-300 + 1e-15 * scale {
                d = C64::new(1e-15 * scale, 0.0);
            }
            y[j] = -s / d;
        }
        let mut v = &q * DMatrix::from_column_slice(n, 1, &y);
        let norm = v.camax();
        let norm2 = (v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if !(norm.is_finite() && norm2 > 0.0) {
            return Err(Error::Numerical(
                "eigenvector back-substitution produced a non-finite vector".into(),
            ));
        }
        v /= C64::new(norm2, 0.0);
        vectors.set_column(i, &v.column(0));
    }
    Ok(Eigen { values, vectors })
}

/// Inverse via LU; errors on singularity.
pub fn inverse(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("matrix is numerically singular".into()))
}

/// Cheap condition estimate `||V||_F * ||V^-1||_F`.
pub fn cond_estimate(v: &DMatrix<C64>, v_inv: &DMatrix<C64>) -> f64 {
    let nf = |m: &DMatrix<C64>| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    nf(v) * nf(v_inv)
}
