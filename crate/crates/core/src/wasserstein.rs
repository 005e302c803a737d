//! Empirical Wasserstein distances: the 1-D quantile formula, an exact
//! assignment solver for equal-size samples in any dimension, and the
//! checks built on them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::noise::stream_rng;

/// Largest sample size accepted by the exact assignment solver.
pub const ASSIGNMENT_CAP: usize = 4096;
/// Resamples used for bootstrap standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// `n` points in `ℝ^d` with weights `1/n`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::DomainError("an empirical measure needs at least one point".into()));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, found: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(EmpiricalMeasure { n, d, data })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::DomainError("points of different dimensions".into()));
        }
        Self::new(points.len(), d, points.iter().flat_map(|p| p.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sample mean.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.d);
        for p in self.points() {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += pi;
            }
        }
        m / self.n as f64
    }

    /// Sample covariance with divisor `n − 1` (zero when `n = 1`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        let mut c = DMatrix::zeros(self.d, self.d);
        for p in self.points() {
            let z = DVector::from_iterator(self.d, p.iter().zip(m.iter()).map(|(a, b)| a - b));
            c += &z * z.transpose();
        }
        if self.n > 1 {
            c / (self.n - 1) as f64
        } else {
            c
        }
    }

    pub fn shifted(&self, u: &[f64]) -> Result<Self> {
        if u.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: u.len() });
        }
        let data = self.data.iter().enumerate().map(|(k, v)| v + u[k % self.d]).collect();
        Ok(EmpiricalMeasure { data, ..*self })
    }

    pub fn scaled(&self, c: f64) -> Self {
        EmpiricalMeasure { data: self.data.iter().map(|v| v * c).collect(), ..*self }
    }

    /// Image under `f`, which must map every point to the same dimension.
    pub fn map<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Self> {
        let images: Vec<Vec<f64>> = self.points().map(f).collect();
        let d = images[0].len();
        if images.iter().any(|v| v.len() != d) {
            return Err(Error::DomainError("map changes dimension between points".into()));
        }
        Self::new(self.n, d, images.concat())
    }

    /// Points `range.start..range.end`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.n || range.start >= range.end {
            return Err(Error::DomainError(format!("invalid sample range {range:?} of {}", self.n)));
        }
        Self::new(range.len(), self.d, self.data[range.start * self.d..range.end * self.d].to_vec())
    }

    /// Points at the given indices, repeats allowed.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.point(i));
        }
        EmpiricalMeasure { n: idx.len(), d: self.d, data }
    }

    /// The first and second halves (the middle point goes to neither when
    /// `n` is odd).
    pub fn halves(&self) -> Result<(Self, Self)> {
        let h = self.n / 2;
        if h == 0 {
            return Err(Error::DomainError("need at least two points to split".into()));
        }
        Ok((self.slice(0..h)?, self.slice(self.n - h..self.n)?))
    }
}

fn exponent(p: f64) -> f64 {
    (1.0 / p).min(1.0)
}

fn check_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("order p must be positive and finite, got {p}")))
    }
}

fn sorted(a: &EmpiricalMeasure) -> Vec<f64> {
    let mut v = a.data.clone();
    v.sort_by(f64::total_cmp);
    v
}

/// `∫₀¹ |F_a^{-1}(s) − F_b^{-1}(s)|^p ds` for sorted samples, merging the
/// two step functions so unequal sizes are handled exactly.
fn quantile_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>() / na as f64;
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut s = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - s) * (a[i] - b[j]).abs().powf(p);
        s = next;
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    total
}

/// Wasserstein distance between two 1-D empirical measures through their
/// quantile functions, `(∫|F_a^{-1} − F_b^{-1}|^p)^{min(1,1/p)}`.
///
/// The monotone coupling is optimal for `p ≥ 1`; for `p < 1` the value is
/// only an upper bound, use [`wasserstein_nd`] for the exact distance.
pub fn wasserstein_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    for m in [a, b] {
        if m.d != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: m.d });
        }
    }
    Ok(quantile_cost(&sorted(a), &sorted(b), p).powf(exponent(p)))
}

/// Exact Wasserstein distance between equal-size empirical measures by
/// optimal assignment on the cost `|u − v|^p`.
pub fn wasserstein_nd(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    if a.n != b.n {
        return Err(Error::SizeMismatch { left: a.n, right: b.n });
    }
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, found: b.d });
    }
    if a.n > ASSIGNMENT_CAP {
        return Err(Error::TooLarge { n: a.n, cap: ASSIGNMENT_CAP });
    }
    if p == 2.0 {
        // Σ|a_i − b_σ(i)|² = Σ|a'_i − b'_σ(i)|² + n|ā − b̄|² for centred a', b'.
        let (ma, mb) = (a.mean(), b.mean());
        let shift = (&ma - &mb).norm_squared();
        let neg = |m: &DVector<f64>| m.iter().map(|v| -v).collect::<Vec<f64>>();
        let (ac, bc) = (a.shifted(&neg(&ma))?, b.shifted(&neg(&mb))?);
        let (total, _) = assignment(&cost_matrix(&ac, &bc, p), a.n);
        return Ok((total / a.n as f64 + shift).max(0.0).sqrt());
    }
    let cost = cost_matrix(a, b, p);
    let (total, _) = assignment(&cost, a.n);
    Ok((total / a.n as f64).max(0.0).powf(exponent(p)))
}

/// The exact distance: the quantile formula in 1-D for `p ≥ 1` (any sizes),
/// the assignment solver otherwise.
pub fn wasserstein(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> Result<f64> {
    if a.d == 1 && b.d == 1 && p >= 1.0 {
        wasserstein_1d(a, b, p)
    } else {
        wasserstein_nd(a, b, p)
    }
}

fn cost_matrix(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> Vec<f64> {
    let n = a.n;
    let mut cost = vec![0.0; n * n];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let u = a.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            let v = b.point(j);
            let sq: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
            *c = if p == 2.0 { sq } else { sq.sqrt().powf(p) };
        }
    });
    cost
}

/// Minimum-cost perfect matching of an `n × n` cost matrix (row major) by
/// shortest augmenting paths with dual potentials. Returns the optimal
/// cost and the column assigned to each row.
pub fn assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    // 1-based arrays with column 0 as the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    for i in 1..=n {
        u[i] = cost[(i - 1) * n..i * n].iter().cloned().fold(f64::INFINITY, f64::min);
    }
    for j in 1..=n {
        v[j] = (1..=n).map(|i| cost[(i - 1) * n + j - 1] - u[i]).fold(f64::INFINITY, f64::min);
    }
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of_row[row_of[j] - 1] = j - 1;
        }
    }
    let total = (0..n).map(|i| cost[i * n + col_of_row[i]]).sum();
    (total, col_of_row)
}

/// `W₂` between Gaussian laws,
/// `√(|m₁−m₂|² + tr(S₁ + S₂ − 2(S₂^{1/2} S₁ S₂^{1/2})^{1/2}))`.
pub fn gaussian_w2(m1: &DVector<f64>, s1: &DMatrix<f64>, m2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let d = m1.len();
    for (len, what) in [(m2.len(), "mean"), (s1.nrows(), "covariance"), (s2.nrows(), "covariance")] {
        if len != d {
            return Err(Error::DomainError(format!("{what} of dimension {len}, expected {d}")));
        }
    }
    let r = psd_sqrt(s2);
    let cross = psd_sqrt(&(&r * s1 * &r));
    let tr = (s1 + s2 - cross * 2.0).trace();
    Ok(((m1 - m2).norm_squared() + tr.max(0.0)).sqrt())
}

/// `E|U|^{p'}` under the empirical law.
pub fn empirical_moment(u: &EmpiricalMeasure, p: f64) -> f64 {
    u.points().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(p)).sum::<f64>() / u.n as f64
}

/// Bootstrap standard error of `statistic` over `resamples` index
/// resamples of `0..n`, deterministic in `seed`.
pub fn bootstrap_se<F>(n: usize, resamples: usize, seed: u64, statistic: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if resamples < 2 || n == 0 {
        return 0.0;
    }
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            statistic(&idx)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Outcome of the shift-linearity check `𝒲_p(u + U, U)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShiftCheck {
    /// Empirical `𝒲_p(u + U₁, U₂)` for two independent halves of the sample.
    pub estimate: f64,
    /// `|u|` for `p ≥ 1`, `|u|^p` otherwise.
    pub predicted: f64,
    /// `[max(|u|^p − 2E|U|^p, 0), |u|^p]` for `p < 1`; equal to
    /// `[|u|, |u|]` for `p ≥ 1`.
    pub bracket: (f64, f64),
    /// Bootstrap standard error of `estimate` (`p ≥ 1` only, else zero).
    pub standard_error: f64,
}

impl ShiftCheck {
    pub fn within(&self, k_se: f64) -> bool {
        (self.estimate - self.predicted).abs() <= k_se * self.standard_error
    }

    pub fn in_bracket(&self) -> bool {
        self.bracket.0 <= self.estimate && self.estimate <= self.bracket.1
    }
}

/// Compares the empirical `𝒲_p(u + U, U)` with `|u|` (`p ≥ 1`) or with the
/// bracket valid for `p ∈ (0,1)`.
///
/// The sample is split into independent halves `U₁`, `U₂` and the estimate
/// is `𝒲_p(u + U₁, U₂)`. For `p < 1` both halves are truncated to
/// `ASSIGNMENT_CAP / 2` points so the exact solver applies.
pub fn shift_linearity_check(sample: &EmpiricalMeasure, u: &[f64], p: f64, seed: u64) -> Result<ShiftCheck> {
    check_order(p)?;
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, b) = sample.halves()?;
    if p >= 1.0 {
        let shifted = a.shifted(u)?;
        let estimate = wasserstein(&shifted, &b, p)?;
        let se = bootstrap_se(a.n, BOOTSTRAP_RESAMPLES, seed, |idx| {
            wasserstein(&shifted.select(idx), &b.select(idx), p).unwrap_or(f64::NAN)
        });
        Ok(ShiftCheck { estimate, predicted: norm, bracket: (norm, norm), standard_error: se })
    } else {
        let m = a.n.min(ASSIGNMENT_CAP / 2);
        let a = a.slice(0..m)?;
        let b = b.slice(0..m)?;
        let estimate = wasserstein_nd(&a.shifted(u)?, &b, p)?;
        let up = norm.powf(p);
        let lo = (up - 2.0 * empirical_moment(sample, p)).max(0.0);
        Ok(ShiftCheck { estimate, predicted: up, bracket: (lo, up), standard_error: 0.0 })
    }
}

/// Both sides of `𝒲_p(T(U₁), T(U₂)) ≤ 𝒲_p(U₁, U₂)` for a map `T`, exact
/// solver on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCheck {
    pub image: f64,
    pub original: f64,
    pub holds: bool,
}

pub fn contraction_check<F>(a: &EmpiricalMeasure, b: &EmpiricalMeasure, map: F, p: f64) -> Result<ContractionCheck>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let original = wasserstein_nd(a, b, p)?;
    let image = wasserstein_nd(&a.map(&map)?, &b.map(&map)?, p)?;
    let holds = image <= original + 1e-12 * (1.0 + original);
    Ok(ContractionCheck { image, original, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        let a = EmpiricalMeasure::from_scalars(&[0.0, 0.0]).unwrap();
        let b = EmpiricalMeasure::from_scalars(&[1.0, 1.0]).unwrap();
        assert_eq!(wasserstein_1d(&a, &b, 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_nd(&a, &b, 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&a, &a, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unequal_sizes_in_one_dimension() {
        let a = EmpiricalMeasure::from_scalars(&[0.0]).unwrap();
        let b = EmpiricalMeasure::from_scalars(&[1.0, 3.0]).unwrap();
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(wasserstein_nd(&a, &b, 1.0), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn single_points() {
        let a = EmpiricalMeasure::from_points(&[DVector::from_vec(vec![0.0, 0.0])]).unwrap();
        let b = EmpiricalMeasure::from_points(&[DVector::from_vec(vec![3.0, 4.0])]).unwrap();
        assert!((wasserstein_nd(&a, &b, 0.5).unwrap() - 5f64.sqrt()).abs() < 1e-14);
        assert!((wasserstein_nd(&a, &b, 3.0).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn assignment_finds_permutation() {
        let pts: Vec<DVector<f64>> = (0..6).map(|i| DVector::from_vec(vec![i as f64, (i * i) as f64])).collect();
        let a = EmpiricalMeasure::from_points(&pts).unwrap();
        let b = a.select(&[3, 1, 5, 0, 2, 4]);
        assert_eq!(wasserstein_nd(&a, &b, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_closed_form() {
        let m = DVector::from_vec(vec![3.0, 4.0]);
        let i = DMatrix::<f64>::identity(2, 2);
        assert!((gaussian_w2(&DVector::zeros(2), &i, &m, &i).unwrap() - 5.0).abs() < 1e-12);
        let s = &i * 4.0;
        assert!((gaussian_w2(&DVector::zeros(2), &i, &DVector::zeros(2), &s).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn point_mass_moment() {
        let u = EmpiricalMeasure::from_points(&vec![DVector::from_vec(vec![3.0, 4.0]); 3]).unwrap();
        assert!((empirical_moment(&u, 2.0) - 25.0).abs() < 1e-12);
        let z = EmpiricalMeasure::from_scalars(&[0.0]).unwrap();
        assert_eq!(empirical_moment(&z, 1.5), 0.0);
    }
}
