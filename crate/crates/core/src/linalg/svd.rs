use nalgebra::{ComplexField, DMatrix, DVector};

/// Singular value decomposition `A = U diag(σ) Vᴴ` by one-sided Jacobi
/// rotations, singular values descending. `V` is always square; columns of
/// `U` belonging to zero singular values are zero.
pub(crate) struct JacobiSvd<T: ComplexField<RealField = f64>> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

const SWEEPS: usize = 60;

pub(crate) fn jacobi_svd<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> JacobiSvd<T> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    let tol = f64::EPSILON * (m.max(1) as f64);
    for _ in 0..SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.modulus();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp.scale(c) - xq.scale(s);
                        mat[(i, q)] = xp.scale(s) + xq.scale(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u_cols: Vec<DVector<T>> = order
        .iter()
        .map(|&j| {
            if norms[j] > 0.0 {
                w.column(j).unscale(norms[j])
            } else {
                DVector::zeros(m)
            }
        })
        .collect();
    let v_cols: Vec<DVector<T>> = order.iter().map(|&j| v.column(j).into_owned()).collect();
    let u = if n == 0 { DMatrix::zeros(m, 0) } else { DMatrix::from_columns(&u_cols) };
    let v = if n == 0 { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&v_cols) };
    JacobiSvd { u, sigma, v }
}
