use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` by scaling and squaring with a Padé approximant of degree 3, 5, 7, 9
/// or 13, chosen from the 1-norm of `A`.
pub fn matrix_exponential(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    super::check_square(a)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(ident);
    }
    let norm = one_norm(a);

    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let (u, v) = low_degree(a, m, &ident);
            return pade_quotient(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);
    let (u, v) = degree_13(&scaled, &ident);
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow);
        }
    }
    Ok(r)
}

/// Propagator `e^{-Qt}`.
pub fn propagator(q: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    matrix_exponential(&(q * (-t)))
}

fn low_degree(a: &DMatrix<f64>, m: usize, ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let a2 = a * a;
    let mut powers = vec![ident.clone(), a2.clone()];
    for _ in 2..=m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<f64>::zeros(a.nrows(), a.ncols());
    let mut v = DMatrix::<f64>::zeros(a.nrows(), a.ncols());
    for (k, p) in powers.iter().enumerate() {
        u_inner += p * b[2 * k + 1];
        v += p * b[2 * k];
    }
    (a * u_inner, v)
}

fn degree_13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u_inner = u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1];
    let u = a * u_inner;
    let v_hi = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    (u, v)
}

fn pade_quotient(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    let r = q.lu().solve(&p).ok_or(Error::Overflow)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gives_identity_exactly() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(matrix_exponential(&z).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.5, 1.5, 0.0]);
        let e = matrix_exponential(&a).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.5f64.cos(), -1.5f64.sin(), 1.5f64.sin(), 1.5f64.cos()]);
        assert!((e - expect).norm() < 1e-14);
    }

    #[test]
    fn nilpotent_is_a_finite_series() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 3.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0]);
        let e = matrix_exponential(&a).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 7.0, 0.0, 1.0, 4.0, 0.0, 0.0, 1.0]);
        assert!((e - expect).norm() < 1e-12);
    }

    #[test]
    fn large_diagonal_scales() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-30.0, 5.0]));
        let e = matrix_exponential(&a).unwrap();
        assert!((e[(0, 0)] / (-30f64).exp() - 1.0).abs() < 1e-12);
        assert!((e[(1, 1)] / 5f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![800.0]));
        assert_eq!(matrix_exponential(&a), Err(Error::Overflow));
    }
}
