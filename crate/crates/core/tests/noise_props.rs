use cutofflab::error::Error;
use cutofflab::noise::{require_moment, standard_stable, stream_rng, validate_moment, NoiseSampler, NoiseSpec};
use cutofflab::sde::{simulate_marginal, SimOptions};
use cutofflab::system::SystemSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn increments(spec: &NoiseSpec, seed: u64, n: usize) -> Vec<f64> {
    let mut s = NoiseSampler::new(spec).unwrap();
    let mut rng = stream_rng(seed, 0);
    s.restart(&mut rng);
    (0..n).map(|_| s.increment(0.1, &mut rng)[0]).collect()
}

fn drivers() -> Vec<NoiseSpec> {
    vec![
        NoiseSpec::brownian(&DMatrix::identity(2, 2)),
        NoiseSpec::CompoundPoisson { intensity: 3.0, atoms: vec![vec![1.0, 0.0], vec![-0.5, 2.0]], weights: None },
        NoiseSpec::RedNoise {
            lambda: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            inner: Box::new(NoiseSpec::brownian(&DMatrix::identity(2, 2))),
        },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn seeds_give_uncorrelated_increments(s1 in any::<u64>(), s2 in any::<u64>()) {
        prop_assume!(s1 != s2);
        let n = 5000;
        for spec in drivers() {
            let rho = correlation(&increments(&spec, s1, n), &increments(&spec, s2, n));
            prop_assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "{spec:?}: ρ = {rho}");
        }
    }

    #[test]
    fn moment_gate_follows_the_stable_index(alpha in 0.1f64..2.0, p in 0.05f64..4.0) {
        let stable = NoiseSpec::AlphaStable { alpha, scale: 1.0, dim: 1 };
        prop_assert_eq!(validate_moment(&stable, p), p < alpha);
        let red = NoiseSpec::RedNoise { lambda: vec![vec![1.0]], inner: Box::new(stable.clone()) };
        prop_assert_eq!(validate_moment(&red, p), p < alpha);
        let deterministic = NoiseSpec::Deterministic { drift: vec![1.0] };
        let poisson = NoiseSpec::CompoundPoisson { intensity: 1.0, atoms: vec![vec![1.0]], weights: None };
        for spec in [NoiseSpec::brownian(&DMatrix::identity(1, 1)), deterministic, poisson] {
            prop_assert!(validate_moment(&spec, p));
        }
    }
}

/// Slope of log-survival against log-threshold for `|X|` over the
/// 99th to 99.99th percentile band.
fn tail_slope(alpha: f64, n: usize) -> f64 {
    let mut rng = stream_rng(11, alpha.to_bits());
    let mut v: Vec<f64> = (0..n).map(|_| standard_stable(alpha, &mut rng).abs()).collect();
    v.sort_unstable_by(f64::total_cmp);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=20 {
        let survival = 1e-2 * 10f64.powf(-2.0 * k as f64 / 20.0);
        let idx = ((1.0 - survival) * n as f64) as usize;
        xs.push(v[idx.min(n - 1)].ln());
        ys.push(survival.ln());
    }
    cutofflab::entropy::regression_slope(&xs, &ys)
}

#[test]
fn stable_tail_index() {
    for alpha in [0.5, 1.0, 1.5] {
        let slope = tail_slope(alpha, 10_000_000);
        assert!((slope + alpha).abs() <= 0.1 * alpha, "α={alpha}: slope {slope}");
    }
}

#[test]
fn simulation_refuses_missing_moments() {
    let noise = NoiseSpec::AlphaStable { alpha: 1.5, scale: 1.0, dim: 1 };
    let sys = SystemSpec::new(DMatrix::identity(1, 1), DVector::from_vec(vec![1.0]), noise.clone()).unwrap();
    let heavy = sys.clone().with_order(1.6).unwrap();
    let r = simulate_marginal(&heavy, 0.1, 1.0, 10, &SimOptions::new(0));
    assert!(matches!(r, Err(Error::MomentGate { .. })), "{r:?}");
    assert!(matches!(require_moment(&noise, 1.5), Err(Error::MomentGate { .. })));
    assert!(simulate_marginal(&sys.with_order(1.0).unwrap(), 0.1, 1.0, 10, &SimOptions::new(0)).is_ok());
}

#[test]
fn standard_stable_matches_known_laws() {
    // α = 2 is N(0, 2) and α = 1 is standard Cauchy.
    let mut rng = stream_rng(3, 0);
    let n = 200_000;
    let g: Vec<f64> = (0..n).map(|_| standard_stable(2.0, &mut rng)).collect();
    let var = g.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!((var - 2.0).abs() < 0.05, "{var}");
    let mut c: Vec<f64> = (0..n).map(|_| standard_stable(1.0, &mut rng).abs()).collect();
    c.sort_unstable_by(f64::total_cmp);
    // Median of |Cauchy| is tan(π/4) = 1.
    assert!((c[n / 2] - 1.0).abs() < 0.02, "{}", c[n / 2]);
}
