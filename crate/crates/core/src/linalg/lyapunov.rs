use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_finite, check_square, complex_schur, to_complex, CMatrix};
use crate::error::{Error, Result};

/// Solves `QΣ + ΣQᵀ = S` for a stable `Q` (every eigenvalue with positive
/// real part) by back substitution on the complex Schur form of `Q`.
///
/// The result is symmetrised; for `S ⪰ 0` it is the stationary covariance
/// `∫₀^∞ e^{-Qs} S e^{-Qᵀs} ds`.
pub fn lyapunov_solve(q: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(q)?;
    check_square(s)?;
    check_finite(q)?;
    check_finite(s)?;
    let n = q.nrows();
    if s.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.nrows() });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (u, t) = complex_schur(q)?;
    let min_re = (0..n).map(|i| t[(i, i)].re).fold(f64::INFINITY, f64::min);
    if min_re <= 0.0 {
        return Err(Error::UnstableDrift { min_real_part: min_re });
    }
    let c = u.adjoint() * to_complex(s) * &u;

    // T Y + Y Tᴴ = C, column j couples to columns k > j through conj(T[j,k]).
    let mut y = CMatrix::zeros(n, n);
    for j in (0..n).rev() {
        let mut rhs = c.column(j).into_owned();
        for k in j + 1..n {
            let coef = t[(j, k)].conj();
            for i in 0..n {
                rhs[i] -= y[(i, k)] * coef;
            }
        }
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for m in i + 1..n {
                acc -= t[(i, m)] * y[(m, j)];
            }
            y[(i, j)] = acc / (t[(i, i)] + shift);
        }
    }
    let sigma = (&u * y * u.adjoint()).map(|z: Complex64| z.re);
    Ok((&sigma + sigma.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn scalar_multiple_of_identity() {
        let q = DMatrix::<f64>::identity(3, 3) * 2.5;
        let s = lyapunov_solve(&q, &DMatrix::identity(3, 3)).unwrap();
        assert!((s - DMatrix::<f64>::identity(3, 3) * 0.2).norm() < 1e-15);
    }

    #[test]
    fn diagonal_drift() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let s = lyapunov_solve(&q, &DMatrix::identity(2, 2)).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]));
        assert!((s - expect).norm() < 1e-15);
    }

    #[test]
    fn non_normal_residual() {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 0.0, 0.0, 1.0, 5.0, 0.02, 0.0, 2.0]);
        let rhs = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let s = lyapunov_solve(&q, &rhs).unwrap();
        let res = &q * &s + &s * q.transpose() - &rhs;
        assert!(res.norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(lyapunov_solve(&q, &DMatrix::identity(2, 2)), Err(Error::UnstableDrift { .. })));
    }
}
