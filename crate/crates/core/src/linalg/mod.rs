//! Dense linear algebra for the drift matrix: eigen-structure with Jordan
//! chains, the matrix exponential and the Lyapunov equation.

mod eigen;
mod expm;
mod lyapunov;
mod svd;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eigen_structure, EigenBlock, EigenStructure, DEFAULT_CLUSTER_TOL};
pub use expm::{matrix_exponential, propagator};
pub use lyapunov::lyapunov_solve;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn check_square<T: nalgebra::Scalar>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

pub fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

pub fn to_complex_vector(v: &DVector<f64>) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Complex Schur form `Q = U T Uᴴ` with `T` upper triangular.
pub(crate) fn complex_schur(q: &DMatrix<f64>) -> Result<(CMatrix, CMatrix)> {
    let n = q.nrows();
    let schur = Schur::try_new(to_complex(q), f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::NonConvergence)?;
    Ok(schur.unpack())
}

/// Eigenvalues of `Q` in no particular order.
pub fn eigenvalues(q: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_square(q)?;
    check_finite(q)?;
    let (_, t) = complex_schur(q)?;
    Ok((0..q.nrows()).map(|i| t[(i, i)]).collect())
}

/// Smallest real part of the spectrum.
pub fn min_real_part(q: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(q)?.iter().map(|l| l.re).fold(f64::INFINITY, f64::min))
}

/// Fails with `UnstableDrift` unless every eigenvalue has positive real part.
pub fn require_stable(q: &DMatrix<f64>) -> Result<f64> {
    let m = min_real_part(q)?;
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::UnstableDrift { min_real_part: m })
    }
}

/// Symmetric eigendecomposition of `(S + Sᵀ)/2`, eigenvalues ascending.
pub(crate) fn symmetric_eigen(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

/// Eigenvalues of `(S + Sᵀ)/2`, ascending.
pub fn symmetric_eigen_values(s: &DMatrix<f64>) -> DVector<f64> {
    symmetric_eigen(s).0
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues from roundoff are clamped to zero.
pub fn psd_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = symmetric_eigen(s);
    let d = DMatrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    &vecs * d * vecs.transpose()
}

/// `S^{-1/2}` for a symmetric positive definite `S`. Eigenvalues below
/// `rel_tol · λ_max` count as zero and make the matrix singular.
pub fn inverse_sqrt(s: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = symmetric_eigen(s);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    if vals.is_empty() || top <= 0.0 || vals[0] <= rel_tol * top {
        return Err(Error::SingularCovariance);
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// `ln det S` for a symmetric positive definite `S`.
pub fn log_det_spd(s: &DMatrix<f64>) -> Result<f64> {
    let (vals, _) = symmetric_eigen(s);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::SingularCovariance);
    }
    Ok(vals.iter().map(|v| v.ln()).sum())
}

/// Numerical rank of the Kalman matrix `[σ, Qσ, …, Q^{d-1}σ]`.
pub fn controllability_rank(q: &DMatrix<f64>, sigma: &DMatrix<f64>, rel_tol: f64) -> usize {
    let d = q.nrows();
    let k = sigma.ncols();
    let mut kalman = DMatrix::<f64>::zeros(d, d * k);
    let mut block = sigma.clone();
    for j in 0..d {
        kalman.columns_mut(j * k, k).copy_from(&block);
        block = q * block;
    }
    let sv = kalman.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}
