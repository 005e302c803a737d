//! Relative entropy of the Gaussian marginals with respect to the
//! equilibrium, its ε-dichotomy and the weighted profile.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cutoff::cutoff_time;
use crate::error::{Error, Result};
use crate::linalg::{controllability_rank, inverse_sqrt, min_real_part, propagator, symmetric_eigen_values};
use crate::sde::{gaussian_covariance, stationary_covariance};
use crate::spectral::{decompose_default, weighted_normal_growth, SpectralDecomposition, DEFAULT_GEOMETRY_TOL};

/// Relative rank tolerance of the controllability test.
pub const CONTROLLABILITY_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

/// `N(mean, covariance)` with a symmetric positive definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianLaw {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.nrows() });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = covariance.norm().max(f64::MIN_POSITIVE);
        if (&covariance - covariance.transpose()).norm() > SYMMETRY_TOL * scale {
            return Err(Error::DomainError("covariance must be symmetric".into()));
        }
        if symmetric_eigen_values(&covariance).iter().any(|&v| v <= 0.0) {
            return Err(Error::SingularCovariance);
        }
        Ok(GaussianLaw { mean, covariance })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `Tr(Σ_b^{−1}Σ_a) − d + ln(det Σ_b / det Σ_a)`, evaluated as
/// `Σ(μ_i − 1 − ln μ_i)` over the eigenvalues of `Σ_b^{−1/2}Σ_aΣ_b^{−1/2}`.
pub fn covariance_remainder(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let w = inverse_sqrt(b, 0.0)?;
    let m = &w * a * &w;
    let mut total = 0.0;
    for mu in symmetric_eigen_values(&m).iter() {
        if *mu <= 0.0 {
            return Err(Error::SingularCovariance);
        }
        let delta = mu - 1.0;
        total += delta - delta.ln_1p();
    }
    Ok(total)
}

/// `H(a | b) = ½(mᵀΣ_b^{−1}m + Tr(Σ_b^{−1}Σ_a) − d + ln(det Σ_b/det Σ_a))`
/// with `m = mean_a − mean_b`.
pub fn relative_entropy(a: &GaussianLaw, b: &GaussianLaw) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: a.dim() });
    }
    let w = inverse_sqrt(&b.covariance, 0.0)?;
    let shift = (&w * (&a.mean - &b.mean)).norm_squared();
    Ok(0.5 * (shift + covariance_remainder(&a.covariance, &b.covariance)?))
}

/// Law of `X^ε_t(x)` for Brownian forcing with source covariance `S = σσᵀ`.
pub fn marginal_law(q: &DMatrix<f64>, s: &DMatrix<f64>, x: &DVector<f64>, eps: f64, t: f64) -> Result<GaussianLaw> {
    GaussianLaw::new(propagator(q, t)? * x, gaussian_covariance(q, s, t)? * (eps * eps))
}

/// The equilibrium `μ^ε = N(0, ε²Σ∞)`.
pub fn equilibrium_law(q: &DMatrix<f64>, s: &DMatrix<f64>, eps: f64) -> Result<GaussianLaw> {
    GaussianLaw::new(DVector::zeros(q.nrows()), stationary_covariance(q, s)? * (eps * eps))
}

/// `ln H(X^ε_{δt_ε} | μ^ε)` regressed on `ln ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyDichotomy {
    pub delta: f64,
    /// `(ε, H)` per grid point.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope; `2(δ − 1)` when the mean term dominates.
    pub slope: f64,
}

fn require_controllable(q: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<()> {
    let d = q.nrows();
    if sigma.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: sigma.nrows() });
    }
    let rank = controllability_rank(q, sigma, CONTROLLABILITY_TOL);
    if rank < d {
        return Err(Error::DegenerateNoise { rank, dim: d });
    }
    Ok(())
}

/// Least-squares slope of `y` on `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Relative entropy at `t = δt_ε` on a grid of noise levels, with the
/// `ln H` vs `ln ε` slope. For `x = 0` the time scale uses `min Re λ(Q)`
/// and `ℓ = 1`.
pub fn entropy_dichotomy(
    q: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    x: &DVector<f64>,
    delta: f64,
    eps_grid: &[f64],
) -> Result<EntropyDichotomy> {
    require_controllable(q, sigma)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::DomainError(format!("δ must be positive, got {delta}")));
    }
    if eps_grid.len() < 2 {
        return Err(Error::DomainError("the ε grid needs at least two points".into()));
    }
    let (rate, ell) = if x.norm() == 0.0 {
        (min_real_part(q)?, 1)
    } else {
        let dec = decompose_default(q, x)?;
        (dec.rate, dec.multiplicity)
    };
    let s = sigma * sigma.transpose();
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let t = delta * cutoff_time(rate, ell, eps)?;
        let h = relative_entropy(&marginal_law(q, &s, x, eps, t)?, &equilibrium_law(q, &s, eps)?)?;
        points.push((eps, h));
    }
    let lx: Vec<f64> = points.iter().map(|(e, _)| e.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, h)| h.ln()).collect();
    Ok(EntropyDichotomy { delta, slope: regression_slope(&lx, &ly), points })
}

/// `𝔮^{1−ℓ}e^{−𝔮wr}|Σ∞^{−1/2}u|` with `u = Σ_k v_k`, provided the family
/// seen through `Σ∞^{−1/2}` has normal growth.
pub fn entropy_profile(dec: &SpectralDecomposition, sigma_inf: &DMatrix<f64>, w: f64, r: f64) -> Result<f64> {
    let verdict = weighted_normal_growth(dec, sigma_inf, DEFAULT_GEOMETRY_TOL)?;
    if !verdict.profile_exists {
        return Err(Error::NoProfile);
    }
    Ok(dec.rate.powi(1 - dec.multiplicity as i32) * (-dec.rate * w * r).exp() * verdict.representative_norm)
}
