//! Asymptotic spectral decomposition of `e^{-Qt}x` and the normal-growth
//! test deciding whether its limit set lies on a sphere.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square, eigen_structure, inverse_sqrt, propagator, CVector, DEFAULT_CLUSTER_TOL};

/// Relative tolerance of the orthogonality and equal-norm tests.
pub const DEFAULT_GEOMETRY_TOL: f64 = 1e-6;
/// An eigenspace participates when `|P_λ x| > PARTICIPATION_TOL · |x|`.
pub const PARTICIPATION_TOL: f64 = 1e-10;
/// Largest integer coefficient searched by the resonance test.
pub const RESONANCE_HMAX: i64 = 20;
/// Absolute residual below which an integer relation counts as exact.
pub const RESONANCE_TOL: f64 = 1e-9;

const OMEGA_GRID: usize = 4096;
const OMEGA_PERIODS: f64 = 64.0;
const MAX_EXHAUSTIVE_ANGLES: usize = 5;

/// `v = hat + i·check` rotating as `e^{iθt}v` together with its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    /// `θ > 0`, the rotation frequency `−Im λ` of the eigenvalue `λ = 𝔮 − iθ`.
    pub frequency: f64,
    pub hat: DVector<f64>,
    pub check: DVector<f64>,
}

impl Rotation {
    pub fn vector(&self) -> CVector {
        self.hat.zip_map(&self.check, |a, b| Complex64::new(a, b))
    }
}

/// Leading behaviour `e^{𝔮t} t^{1−ℓ} e^{−Qt}x ≈ Σ_k e^{iθ_k t} v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// `𝔮(x)`, the slowest rate among the eigenspaces `x` touches.
    pub rate: f64,
    /// `ℓ(x)`, the largest Jordan depth reached at that rate.
    pub multiplicity: usize,
    /// The real-eigenvalue vector `v₁`, when one contributes.
    pub real_part: Option<DVector<f64>>,
    /// Conjugate pairs, sorted by frequency.
    pub rotations: Vec<Rotation>,
    /// Spectrum of `Q` with multiplicity.
    pub eigenvalues: Vec<Complex64>,
    /// `𝔤(x)`, distance from `𝔮` to the next participating real part.
    pub gap: Option<f64>,
    /// `K(x)`, the largest `|P_λ x|` over all eigenvalues.
    pub component_bound: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number `m` of complex vectors `v_k` (conjugates counted).
    pub fn term_count(&self) -> usize {
        usize::from(self.real_part.is_some()) + 2 * self.rotations.len()
    }

    /// `(θ_k, v_k)` with conjugate pairs listed as `(θ, v)`, `(−θ, v̄)`.
    pub fn terms(&self) -> Vec<(f64, CVector)> {
        let mut out = Vec::new();
        if let Some(v) = &self.real_part {
            out.push((0.0, v.map(|x| Complex64::new(x, 0.0))));
        }
        for r in &self.rotations {
            let v = r.vector();
            out.push((r.frequency, v.clone()));
            out.push((-r.frequency, v.map(|z| z.conj())));
        }
        out
    }

    /// `(v₁, v̂₂, v̌₂, …)`.
    pub fn real_family(&self) -> Vec<DVector<f64>> {
        let mut out: Vec<DVector<f64>> = self.real_part.iter().cloned().collect();
        for r in &self.rotations {
            out.push(r.hat.clone());
            out.push(r.check.clone());
        }
        out
    }

    /// `Σ_k e^{iθ_k t} v_k = v₁ + 2Σ(cos θt·v̂ − sin θt·v̌)`.
    pub fn omega_point(&self, t: f64) -> DVector<f64> {
        let mut out = self.real_part.clone().unwrap_or_else(|| DVector::zeros(self.dim()));
        for r in &self.rotations {
            let (s, c) = (r.frequency * t).sin_cos();
            out += &r.hat * (2.0 * c) - &r.check * (2.0 * s);
        }
        out
    }

    /// `Σ_k v_k`, a point of the limit set `ω(x)`.
    pub fn representative(&self) -> DVector<f64> {
        self.omega_point(0.0)
    }

    /// `|e^{𝔮t} t^{1−ℓ} e^{−Qt}x − Σ_k e^{iθ_k t}v_k|`.
    pub fn convergence_residual(&self, q: &DMatrix<f64>, x: &DVector<f64>, t: f64) -> Result<f64> {
        let scale = (self.rate * t).exp() / t.powi(self.multiplicity as i32 - 1);
        let ex = propagator(q, t)? * x * scale;
        Ok((ex - self.omega_point(t)).norm())
    }

    /// Same decomposition seen through the linear map `w`.
    pub fn transformed(&self, w: &DMatrix<f64>) -> SpectralDecomposition {
        SpectralDecomposition {
            real_part: self.real_part.as_ref().map(|v| w * v),
            rotations: self
                .rotations
                .iter()
                .map(|r| Rotation { frequency: r.frequency, hat: w * &r.hat, check: w * &r.check })
                .collect(),
            ..self.clone()
        }
    }
}

/// Leading spectral data of `e^{-Qt}x`.
///
/// `tol` is the relative eigenvalue clustering tolerance.
pub fn decompose(q: &DMatrix<f64>, x: &DVector<f64>, tol: f64) -> Result<SpectralDecomposition> {
    check_square(q)?;
    check_finite(q)?;
    let d = q.nrows();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let xn = x.norm();
    if xn == 0.0 {
        return Err(Error::ZeroInitialState);
    }
    let es = eigen_structure(q, tol)?;
    let min_re = es.blocks.iter().map(|b| b.eigenvalue.re).fold(f64::INFINITY, f64::min);
    if min_re <= 0.0 {
        return Err(Error::UnstableDrift { min_real_part: min_re });
    }
    let scale = 1.0 + q.norm();
    let powers = es.block_powers(x)?;

    let mut depth = vec![0usize; es.blocks.len()];
    let mut component_bound: f64 = 0.0;
    for (k, w) in powers.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            if wj.norm() > PARTICIPATION_TOL * xn * scale.powi(j as i32) {
                depth[k] = j + 1;
            }
        }
        if depth[k] > 0 {
            component_bound = component_bound.max(w[0].norm());
        }
    }
    let participating: Vec<usize> = (0..es.blocks.len()).filter(|&k| depth[k] > 0).collect();
    let rate = participating.iter().map(|&k| es.blocks[k].eigenvalue.re).fold(f64::INFINITY, f64::min);
    let cluster = tol * scale;
    let leading: Vec<usize> =
        participating.iter().copied().filter(|&k| es.blocks[k].eigenvalue.re <= rate + cluster).collect();
    let multiplicity = leading.iter().map(|&k| depth[k]).max().unwrap_or(1);
    let gap = participating
        .iter()
        .map(|&k| es.blocks[k].eigenvalue.re - rate)
        .filter(|&g| g > cluster)
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));

    let sign = if multiplicity % 2 == 1 { 1.0 } else { -1.0 };
    let factorial: f64 = (1..multiplicity).map(|i| i as f64).product();
    let coef = Complex64::new(sign / factorial, 0.0);
    let mut real_part = None;
    let mut rotations = Vec::new();
    for &k in &leading {
        if depth[k] != multiplicity {
            continue;
        }
        let lambda = es.blocks[k].eigenvalue;
        let v = &powers[k][multiplicity - 1] * coef;
        if lambda.im == 0.0 {
            real_part = Some(v.map(|z| z.re));
        } else if lambda.im < 0.0 {
            rotations.push(Rotation { frequency: -lambda.im, hat: v.map(|z| z.re), check: v.map(|z| z.im) });
        }
    }
    rotations.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(SpectralDecomposition {
        rate,
        multiplicity,
        real_part,
        rotations,
        eigenvalues: es.eigenvalues(),
        gap,
        component_bound,
    })
}

/// Decomposition with the default clustering tolerance.
pub fn decompose_default(q: &DMatrix<f64>, x: &DVector<f64>) -> Result<SpectralDecomposition> {
    decompose(q, x, DEFAULT_CLUSTER_TOL)
}

/// Outcome of the normal-growth test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalGrowthVerdict {
    pub orthogonal: bool,
    pub equal_norms: bool,
    pub resonant: bool,
    pub omega_on_sphere: bool,
    pub profile_exists: bool,
    /// `|Σ_k v_k|`, the radius of the sphere when a profile exists.
    pub representative_norm: f64,
}

/// Integer relation `h·θ ∈ 2πℤ`, `0 < max|h_i| ≤ hmax`, within `tol`.
pub fn resonance_relation(angles: &[f64], tol: f64, hmax: i64) -> Option<Vec<i64>> {
    let n = angles.len();
    if n == 0 {
        return None;
    }
    let mut h = vec![0i64; n];
    fn search(angles: &[f64], h: &mut [i64], i: usize, sum: f64, leading: bool, tol: f64, hmax: i64) -> bool {
        if i == angles.len() {
            if leading {
                return false;
            }
            let turns = sum / (2.0 * PI);
            return (sum - 2.0 * PI * turns.round()).abs() <= tol;
        }
        let lo = if leading { 0 } else { -hmax };
        for c in lo..=hmax {
            h[i] = c;
            if search(angles, h, i + 1, sum + c as f64 * angles[i], leading && c == 0, tol, hmax) {
                return true;
            }
        }
        h[i] = 0;
        false
    }
    if search(angles, &mut h, 0, 0.0, true, tol, hmax) {
        Some(h)
    } else {
        None
    }
}

/// True when the angles satisfy a small integer relation modulo `2π`.
/// More than five angles are reported resonant without searching, which
/// hands the decision to the sampled limit-set test.
pub fn resonance_test(angles: &[f64], tol: f64) -> bool {
    if angles.len() > MAX_EXHAUSTIVE_ANGLES {
        return true;
    }
    resonance_relation(angles, tol, RESONANCE_HMAX).is_some()
}

/// Samples `|Σ e^{iθ_k t}v_k|` on 4096 points over 64 periods of the
/// slowest rotation and reports whether it is constant to `tol`.
pub fn omega_on_sphere(dec: &SpectralDecomposition, tol: f64) -> bool {
    let Some(slowest) = dec.rotations.iter().map(|r| r.frequency).reduce(f64::min) else {
        return true;
    };
    let horizon = OMEGA_PERIODS * 2.0 * PI / slowest;
    let norms: Vec<f64> =
        (0..OMEGA_GRID).map(|i| dec.omega_point(horizon * i as f64 / OMEGA_GRID as f64).norm()).collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    norms.iter().all(|n| (n - mean).abs() <= tol * mean)
}

fn geometry(family: &[DVector<f64>], rotations: &[(f64, f64)], tol: f64) -> (bool, bool) {
    let mut orthogonal = true;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family[i].dot(&family[j]).abs() > tol * family[i].norm() * family[j].norm() {
                orthogonal = false;
            }
        }
    }
    let equal_norms = rotations.iter().all(|(a, b)| (a - b).abs() <= tol * a.max(*b));
    (orthogonal, equal_norms)
}

/// Decides whether `ω(x)` lies on a sphere, i.e. whether an explicit
/// cutoff profile exists.
pub fn normal_growth(dec: &SpectralDecomposition, tol: f64) -> NormalGrowthVerdict {
    let family = dec.real_family();
    let norms: Vec<(f64, f64)> = dec.rotations.iter().map(|r| (r.hat.norm(), r.check.norm())).collect();
    let (orthogonal, equal_norms) = geometry(&family, &norms, tol);
    let angles: Vec<f64> = dec.rotations.iter().map(|r| r.frequency).collect();
    let resonant = resonance_test(&angles, RESONANCE_TOL);
    let omega = omega_on_sphere(dec, tol);
    let profile_exists = if resonant { omega } else { orthogonal && equal_norms };
    NormalGrowthVerdict {
        orthogonal,
        equal_norms,
        resonant,
        omega_on_sphere: omega,
        profile_exists,
        representative_norm: dec.representative().norm(),
    }
}

/// Normal growth of the family seen through `Σ∞^{-1/2}`, which governs the
/// entropy profile.
pub fn weighted_normal_growth(
    dec: &SpectralDecomposition,
    sigma_inf: &DMatrix<f64>,
    tol: f64,
) -> Result<NormalGrowthVerdict> {
    if sigma_inf.nrows() != dec.dim() || sigma_inf.ncols() != dec.dim() {
        return Err(Error::DimensionMismatch { expected: dec.dim(), found: sigma_inf.nrows() });
    }
    let w = inverse_sqrt(sigma_inf, 1e-12)?;
    Ok(normal_growth(&dec.transformed(&w), tol))
}

/// The explicit two-dimensional test for a matrix with complex eigenvalues
/// `λ± = λ̂ ± iλ̌`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorCheck {
    pub eigenvalue: Complex64,
    /// `Re((Q − λ₊)z)`
    pub a: DVector<f64>,
    /// `Im((Q − λ₊)z)`
    pub b: DVector<f64>,
    pub verdict: NormalGrowthVerdict,
}

/// For `2×2` `Q` with non-real eigenvalues, `ω(z)` is a circle iff
/// `|a| = |b|` and `⟨a, b⟩ = 0` where `a + ib = (Q − λ₊)z`.
pub fn oscillator_2x2_check(q: &DMatrix<f64>, z: &DVector<f64>, tol: f64) -> Result<OscillatorCheck> {
    check_square(q)?;
    check_finite(q)?;
    if q.nrows() != 2 || z.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: q.nrows().max(z.len()) });
    }
    if z.norm() == 0.0 {
        return Err(Error::ZeroInitialState);
    }
    let tr = q.trace();
    let det = q.determinant();
    let disc = det - tr * tr / 4.0;
    if disc <= 0.0 {
        return Err(Error::RealSpectrum);
    }
    let lam = Complex64::new(tr / 2.0, disc.sqrt());
    let a = q * z - z * lam.re;
    let b = -z * lam.im;
    let (orthogonal, equal_norms) = geometry(&[a.clone(), b.clone()], &[(a.norm(), b.norm())], tol);
    let profile_exists = orthogonal && equal_norms;
    let verdict = NormalGrowthVerdict {
        orthogonal,
        equal_norms,
        resonant: false,
        omega_on_sphere: profile_exists,
        profile_exists,
        representative_norm: b.norm() / lam.im,
    };
    Ok(OscillatorCheck { eigenvalue: lam, a, b, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn diagonal_system() {
        let q = DMatrix::from_diagonal(&dv(&[1.0, 2.0]));
        let dec = decompose_default(&q, &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(dec.rate, 1.0);
        assert_eq!(dec.multiplicity, 1);
        assert!((dec.real_part.as_ref().unwrap() - dv(&[1.0, 0.0])).norm() < 1e-14);
        assert!(dec.rotations.is_empty());
        assert!((dec.gap.unwrap() - 1.0).abs() < 1e-14);
        let only_fast = decompose_default(&q, &dv(&[0.0, 1.0])).unwrap();
        assert_eq!(only_fast.rate, 2.0);
        assert_eq!(only_fast.gap, None);
    }

    #[test]
    fn rotation_system() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -3.0, 1.0]);
        let x = dv(&[1.0, 0.0]);
        let dec = decompose_default(&q, &x).unwrap();
        assert!((dec.rate - 1.0).abs() < 1e-12);
        assert_eq!(dec.rotations.len(), 1);
        assert!((dec.rotations[0].frequency - 3.0).abs() < 1e-12);
        for t in [0.0, 0.3, 1.7] {
            assert!(dec.convergence_residual(&q, &x, f64::max(t, 1e-9)).unwrap() < 1e-10);
        }
        let v = normal_growth(&dec, DEFAULT_GEOMETRY_TOL);
        assert!(v.profile_exists && v.orthogonal && v.equal_norms && !v.resonant);
        assert!((v.representative_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_oscillator_has_depth_two() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 2.0]);
        let dec = decompose_default(&q, &dv(&[1.0, 0.0])).unwrap();
        assert_eq!(dec.multiplicity, 2);
        assert!((dec.rate - 1.0).abs() < 1e-7);
        // e^{-Qt}(1,0) = e^{-t}((1+t), -t); the t-coefficient is (1, -1).
        let v = dec.real_part.unwrap();
        assert!((v - dv(&[1.0, -1.0])).norm() < 1e-6);
    }

    #[test]
    fn jordan_depth_follows_the_chain() {
        let mut q = DMatrix::<f64>::identity(3, 3) * 0.5;
        q[(0, 1)] = 1.0;
        q[(1, 2)] = 1.0;
        assert_eq!(decompose_default(&q, &dv(&[0.0, 0.0, 1.0])).unwrap().multiplicity, 3);
        assert_eq!(decompose_default(&q, &dv(&[0.0, 1.0, 0.0])).unwrap().multiplicity, 2);
        assert_eq!(decompose_default(&q, &dv(&[1.0, 0.0, 0.0])).unwrap().multiplicity, 1);
    }

    #[test]
    fn errors() {
        let q = DMatrix::<f64>::identity(2, 2);
        assert_eq!(decompose_default(&q, &dv(&[0.0, 0.0])), Err(Error::ZeroInitialState));
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(decompose_default(&bad, &dv(&[1.0, 0.0])), Err(Error::UnstableDrift { .. })));
    }

    #[test]
    fn resonance_examples() {
        assert!(!resonance_test(&[], RESONANCE_TOL));
        assert!(resonance_test(&[0.7, 1.4], RESONANCE_TOL));
        assert!(!resonance_test(&[1.0, 2f64.sqrt()], RESONANCE_TOL));
        assert!(resonance_test(&[PI], RESONANCE_TOL));
    }

    #[test]
    fn textbook_oscillator_check() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 1.0]);
        let c = oscillator_2x2_check(&q, &dv(&[1.0, 0.0]), DEFAULT_GEOMETRY_TOL).unwrap();
        assert!((&c.a - dv(&[-0.5, 1.0])).norm() < 1e-14);
        assert!((&c.b - dv(&[-(3f64.sqrt()) / 2.0, 0.0])).norm() < 1e-14);
        assert!(!c.verdict.profile_exists);
        let overdamped = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 3.0]);
        assert_eq!(oscillator_2x2_check(&overdamped, &dv(&[1.0, 0.0]), 1e-6), Err(Error::RealSpectrum));
    }

    #[test]
    fn weighting_breaks_equal_norms() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -3.0, 1.0]);
        let dec = decompose_default(&q, &dv(&[1.0, 0.0])).unwrap();
        let v = weighted_normal_growth(&dec, &DMatrix::from_diagonal(&dv(&[1.0, 4.0])), DEFAULT_GEOMETRY_TOL).unwrap();
        assert!(v.orthogonal && !v.equal_norms && !v.profile_exists);
        let singular = DMatrix::from_diagonal(&dv(&[1.0, 0.0]));
        assert_eq!(weighted_normal_growth(&dec, &singular, 1e-6), Err(Error::SingularCovariance));
    }
}
