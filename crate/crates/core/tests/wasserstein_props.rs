use cutofflab::wasserstein::{
    assignment, contraction_check, gaussian_w2, shift_linearity_check, wasserstein_1d, wasserstein_nd, EmpiricalMeasure,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> EmpiricalMeasure {
    let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal) * spread).collect();
    EmpiricalMeasure::new(n, d, data).unwrap()
}

fn order() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(3.0), 0.2f64..4.0]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symmetric(seed in any::<u64>(), n in 1usize..40, d in 1usize..4, p in order()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, d, 1.0), cloud(&mut rng, n, d, 2.0));
        let (ab, ba) = (wasserstein_nd(&a, &b, p).unwrap(), wasserstein_nd(&b, &a, p).unwrap());
        prop_assert!(close(ab, ba), "{ab} vs {ba}");
        prop_assert_eq!(wasserstein_nd(&a, &a, p).unwrap(), 0.0);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), n in 1usize..30, d in 1usize..4, p in order()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = cloud(&mut rng, n, d, 1.0);
        let b = cloud(&mut rng, n, d, 0.5);
        let c = cloud(&mut rng, n, d, 3.0);
        let ac = wasserstein_nd(&a, &c, p).unwrap();
        let via = wasserstein_nd(&a, &b, p).unwrap() + wasserstein_nd(&b, &c, p).unwrap();
        prop_assert!(ac <= via * (1.0 + 1e-12) + 1e-14, "{ac} > {via}");
    }

    #[test]
    fn translation_invariant(seed in any::<u64>(), n in 1usize..40, d in 1usize..4, p in order(), k in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, d, 1.0), cloud(&mut rng, n, d, 1.5));
        let u: Vec<f64> = (0..d).map(|i| k * (i as f64 + 1.0)).collect();
        let base = wasserstein_nd(&a, &b, p).unwrap();
        let moved = wasserstein_nd(&a.shifted(&u).unwrap(), &b.shifted(&u).unwrap(), p).unwrap();
        // Shifting rounds every coordinate once, so allow that much.
        prop_assert!((base - moved).abs() <= 1e-12 * (1.0 + base) * (1.0 + k.abs() * d as f64), "{base} vs {moved}");
    }

    #[test]
    fn homogeneous(seed in any::<u64>(), n in 1usize..40, d in 1usize..4, p in order(), c in -4.0f64..4.0) {
        prop_assume!(c.abs() > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, d, 1.0), cloud(&mut rng, n, d, 1.5));
        let base = wasserstein_nd(&a, &b, p).unwrap();
        let scaled = wasserstein_nd(&a.scaled(c), &b.scaled(c), p).unwrap();
        let want = c.abs().powf(p.min(1.0)) * base;
        prop_assert!((scaled - want).abs() <= 1e-12 * (1.0 + want), "{scaled} vs {want}");
    }

    #[test]
    fn one_dimensional_formula_agrees(seed in any::<u64>(), n in 1usize..60, p in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, 1, 1.0), cloud(&mut rng, n, 1, 2.0));
        let (q, e) = (wasserstein_1d(&a, &b, p).unwrap(), wasserstein_nd(&a, &b, p).unwrap());
        prop_assert!((q - e).abs() <= 1e-12 * (1.0 + q), "{q} vs {e}");
    }

    #[test]
    fn one_dimensional_formula_bounds_small_orders(seed in any::<u64>(), n in 1usize..60, p in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, 1, 1.0), cloud(&mut rng, n, 1, 2.0));
        prop_assert!(wasserstein_nd(&a, &b, p).unwrap() <= wasserstein_1d(&a, &b, p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn assignment_beats_every_transposition(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let (total, perm) = assignment(&cost, n);
        let mut seen = perm.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for i in 0..n {
            for j in i + 1..n {
                let swapped = total - cost[i * n + perm[i]] - cost[j * n + perm[j]] + cost[i * n + perm[j]] + cost[j * n + perm[i]];
                prop_assert!(swapped >= total - 1e-12);
            }
        }
    }

    #[test]
    fn contractions_do_not_increase_distance(seed in any::<u64>(), n in 1usize..30, p in order(), angle in 0.0f64..6.3, shrink in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (cloud(&mut rng, n, 2, 1.0), cloud(&mut rng, n, 2, 2.0));
        let (s, c) = angle.sin_cos();
        let map = |x: &[f64]| vec![shrink * (c * x[0] - s * x[1]), shrink * (s * x[0] + c * x[1])];
        prop_assert!(contraction_check(&a, &b, map, p).unwrap().holds);
    }
}

#[test]
fn assignment_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=6 {
        let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        heap_permutations(&mut perm, n, &mut |p| {
            best = best.min((0..n).map(|i| cost[i * n + p[i]]).sum());
        });
        assert!((assignment(&cost, n).0 - best).abs() < 1e-12);
    }
}

fn heap_permutations(a: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k <= 1 {
        f(a);
        return;
    }
    for i in 0..k {
        heap_permutations(a, k - 1, f);
        a.swap(if k % 2 == 0 { i } else { 0 }, k - 1);
    }
}

#[test]
fn gaussian_closed_form_in_one_dimension() {
    let w = gaussian_w2(
        &DVector::from_vec(vec![1.0]),
        &DMatrix::from_element(1, 1, 4.0),
        &DVector::from_vec(vec![-2.0]),
        &DMatrix::from_element(1, 1, 9.0),
    )
    .unwrap();
    assert!((w - (9.0f64 + 1.0).sqrt()).abs() < 1e-14);
}

#[test]
fn shift_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let line = cloud(&mut rng, 100_000, 1, 1.0);
    for p in [1.0, 2.0, 3.0] {
        for u in [0.3, 1.5] {
            let c = shift_linearity_check(&line, &[u], p, 1).unwrap();
            assert!(c.within(3.0), "p={p} u={u}: {c:?}");
        }
    }
    let plane = cloud(&mut rng, 600, 2, 1.0);
    for u in [[0.3, 0.4], [3.0, 4.0]] {
        let c = shift_linearity_check(&plane, &u, 0.5, 1).unwrap();
        assert!(c.in_bracket(), "{c:?}");
    }
}
