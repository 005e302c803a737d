use cutofflab::cutoff::cutoff_time;
use cutofflab::entropy::{covariance_remainder, entropy_profile, equilibrium_law, marginal_law, relative_entropy, GaussianLaw};
use cutofflab::linalg::{min_real_part, psd_sqrt};
use cutofflab::sde::{gaussian_covariance, stationary_covariance};
use cutofflab::spectral::{decompose_default, normal_growth, weighted_normal_growth, DEFAULT_GEOMETRY_TOL};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = gaussian_matrix(rng, d, d);
    &a * a.transpose() + DMatrix::identity(d, d) * 0.2
}

fn draw(law: &GaussianLaw, n: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let root = psd_sqrt(law.covariance());
    let d = law.dim();
    (0..n).map(|_| law.mean() + &root * DVector::from_fn(d, |_, _| rng.sample(StandardNormal))).collect()
}

/// One-nearest-neighbour divergence estimate
/// `(d/n)Σ ln(ν_i/ρ_i) + ln(m/(n−1))`, where `ρ_i` is the distance from
/// `p_i` to the rest of `p` and `ν_i` its distance to `q`.
fn knn_divergence(p: &[DVector<f64>], q: &[DVector<f64>]) -> f64 {
    let (n, m, d) = (p.len(), q.len(), p[0].len() as f64);
    let nearest = |x: &DVector<f64>, set: &[DVector<f64>], skip: Option<usize>| {
        set.iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, y)| (x - y).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let sum: f64 = p.iter().enumerate().map(|(i, x)| (nearest(x, q, None) / nearest(x, p, Some(i))).ln()).sum();
    d * sum / n as f64 + (m as f64 / (n as f64 - 1.0)).ln()
}

#[test]
fn closed_form_matches_nearest_neighbour_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let systems = [
        (DMatrix::from_element(1, 1, 1.0), DVector::from_vec(vec![1.5]), 0.6),
        (DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, 1.0]), DVector::from_vec(vec![1.0, 0.5]), 0.5),
        (
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.5, 0.5, 0.0, 0.0, 2.0]),
            DVector::from_vec(vec![0.5, -0.8, 1.0]),
            0.4,
        ),
    ];
    for (q, x, t) in systems {
        let d = q.nrows();
        let s = DMatrix::identity(d, d);
        let a = marginal_law(&q, &s, &x, 1.0, t).unwrap();
        let b = equilibrium_law(&q, &s, 1.0).unwrap();
        let exact = relative_entropy(&a, &b).unwrap();
        let estimate = knn_divergence(&draw(&a, 6000, &mut rng), &draw(&b, 6000, &mut rng));
        assert!((estimate - exact).abs() <= 0.1 * exact, "d={d}: kNN {estimate} vs exact {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_the_trace_logdet_formula(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sa, sb) = (spd(&mut rng, d), spd(&mut rng, d));
        let (ma, mb) = (gaussian_matrix(&mut rng, d, 1).column(0).into_owned(), gaussian_matrix(&mut rng, d, 1).column(0).into_owned());
        let h = relative_entropy(&GaussianLaw::new(ma.clone(), sa.clone()).unwrap(), &GaussianLaw::new(mb.clone(), sb.clone()).unwrap()).unwrap();
        let inv = sb.clone().try_inverse().unwrap();
        let m = &ma - &mb;
        let oracle = 0.5 * ((m.transpose() * &inv * &m)[(0, 0)] + (&inv * &sa).trace() - d as f64 + sb.determinant().ln() - sa.determinant().ln());
        prop_assert!((h - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "{h} vs {oracle}");
        prop_assert!(h >= 0.0);
    }

    #[test]
    fn remainder_vanishes_monotonically_along_the_time_scale(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian_matrix(&mut rng, d, d);
        let min = a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let q = a + DMatrix::identity(d, d) * (rng.random_range(0.3..1.5) - min);
        let s = spd(&mut rng, d);
        let inf = stationary_covariance(&q, &s).unwrap();
        let rate = min_real_part(&q).unwrap();
        let values: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| {
                let t = cutoff_time(rate, 1, eps).unwrap();
                covariance_remainder(&gaussian_covariance(&q, &s, t).unwrap(), &inf).unwrap()
            })
            .collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14), "{values:?}");
        prop_assert!(values[3] < values[0] || values[0] < 1e-12, "{values:?}");
    }

    #[test]
    fn isotropic_equilibrium_keeps_the_verdict(seed in any::<u64>(), d in 2usize..=4, c in 0.1f64..5.0) {
        // Q + Qᵀ = S/c gives Σ∞ = cI for any skew part.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sym = spd(&mut rng, d) * 0.5;
        let g = gaussian_matrix(&mut rng, d, d);
        let skew = (&g - g.transpose()) * rng.random_range(0.0..2.0);
        let q = &sym + &skew;
        let s = (&q + q.transpose()) * c;
        let inf = stationary_covariance(&q, &s).unwrap();
        prop_assert!((&inf - DMatrix::<f64>::identity(d, d) * c).norm() <= 1e-9 * c);
        let x = gaussian_matrix(&mut rng, d, 1).column(0).into_owned();
        let dec = decompose_default(&q, &x).unwrap();
        let plain = normal_growth(&dec, DEFAULT_GEOMETRY_TOL);
        let weighted = weighted_normal_growth(&dec, &inf, DEFAULT_GEOMETRY_TOL).unwrap();
        prop_assert_eq!(plain.profile_exists, weighted.profile_exists);
        if plain.profile_exists {
            let want = dec.rate.powi(1 - dec.multiplicity as i32) * plain.representative_norm / c.sqrt();
            let got = entropy_profile(&dec, &inf, 1.0, 0.0).unwrap();
            prop_assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
        }
    }
}
