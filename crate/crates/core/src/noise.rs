//! Driving processes: Brownian motion, compound Poisson, symmetric
//! α-stable, deterministic drift and stationary red noise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, require_stable, spectral_norm};

/// A Lévy driver, or a stationary Ornstein–Uhlenbeck process driven by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Brownian motion with covariance `Σ` per unit time.
    Brownian { covariance: Vec<Vec<f64>> },
    /// Jumps arrive at rate `intensity`; each jump is atom `i` with
    /// probability `weights[i]` (uniform when omitted).
    CompoundPoisson {
        intensity: f64,
        atoms: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Independent symmetric α-stable coordinates with characteristic
    /// function `exp(−scale^α |u|^α)` at unit time.
    AlphaStable { alpha: f64, scale: f64, dim: usize },
    /// `L_t = t·drift`.
    Deterministic { drift: Vec<f64> },
    /// `dU = −ΛU dt + dL` started in its stationary law; the increments of
    /// `U` drive the system.
    RedNoise { lambda: Vec<Vec<f64>>, inner: Box<NoiseSpec> },
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl NoiseSpec {
    pub fn brownian(covariance: &DMatrix<f64>) -> Self {
        NoiseSpec::Brownian {
            covariance: covariance.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    /// Dimension of the driver.
    pub fn dim(&self) -> usize {
        match self {
            NoiseSpec::Brownian { covariance } => covariance.len(),
            NoiseSpec::CompoundPoisson { atoms, .. } => atoms.first().map_or(0, Vec::len),
            NoiseSpec::AlphaStable { dim, .. } => *dim,
            NoiseSpec::Deterministic { drift } => drift.len(),
            NoiseSpec::RedNoise { inner, .. } => inner.dim(),
        }
    }

    /// Supremum of the finite moment orders, `∞` unless α-stable with α < 2.
    pub fn moment_limit(&self) -> f64 {
        match self {
            NoiseSpec::AlphaStable { alpha, .. } if *alpha < 2.0 => *alpha,
            NoiseSpec::RedNoise { inner, .. } => inner.moment_limit(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseSpec::Brownian { .. })
    }

    /// Checks parameters: shapes, positivity, symmetry, stability of `Λ`.
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Brownian { covariance } => {
                let s = matrix_from_rows(covariance)?;
                if s.nrows() != s.ncols() || s.nrows() == 0 {
                    return Err(Error::Config("Brownian covariance must be square and non-empty".into()));
                }
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                if (&s - s.transpose()).norm() > 1e-12 * (1.0 + s.norm()) {
                    return Err(Error::Config("Brownian covariance must be symmetric".into()));
                }
                let min = s.clone().symmetric_eigenvalues().min();
                if min < -1e-12 * (1.0 + s.norm()) {
                    return Err(Error::Config("Brownian covariance must be positive semidefinite".into()));
                }
            }
            NoiseSpec::CompoundPoisson { intensity, atoms, weights } => {
                if !(intensity.is_finite() && *intensity > 0.0) {
                    return Err(Error::Config("compound Poisson intensity must be positive".into()));
                }
                matrix_from_rows(atoms)?;
                if atoms.is_empty() || atoms[0].is_empty() {
                    return Err(Error::Config("compound Poisson needs at least one atom".into()));
                }
                if let Some(w) = weights {
                    if w.len() != atoms.len() || w.iter().any(|v| !(*v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                        return Err(Error::Config("compound Poisson weights must be non-negative, one per atom".into()));
                    }
                }
            }
            NoiseSpec::AlphaStable { alpha, scale, dim } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(Error::Config("stability index must lie in (0, 2]".into()));
                }
                if !(scale.is_finite() && *scale > 0.0) || *dim == 0 {
                    return Err(Error::Config("α-stable scale must be positive and dim non-zero".into()));
                }
            }
            NoiseSpec::Deterministic { drift } => {
                if drift.is_empty() || drift.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("deterministic drift must be finite and non-empty".into()));
                }
            }
            NoiseSpec::RedNoise { lambda, inner } => {
                inner.validate()?;
                let l = matrix_from_rows(lambda)?;
                if l.nrows() != l.ncols() || l.nrows() != inner.dim() {
                    return Err(Error::DimensionMismatch { expected: inner.dim(), found: l.nrows() });
                }
                require_stable(&l)?;
            }
        }
        Ok(())
    }
}

/// True iff the driver has a finite moment of order `p`.
pub fn validate_moment(spec: &NoiseSpec, p: f64) -> bool {
    p > 0.0 && (p < spec.moment_limit() || spec.moment_limit() == f64::INFINITY)
}

/// `MomentGate` error unless [`validate_moment`] holds.
pub fn require_moment(spec: &NoiseSpec, p: f64) -> Result<()> {
    if validate_moment(spec, p) {
        Ok(())
    } else {
        Err(Error::MomentGate { order: p, limit: spec.moment_limit() })
    }
}

/// Lévy–Itô data of `σL` used by the stationary moment bound: drift `b`,
/// the Hilbert–Schmidt norm of `Σ^{1/2}`, and the two jump integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyData {
    pub drift_norm: f64,
    pub gaussian_hs_norm: f64,
    /// `∫_{|z|≤1} |z|² ν(dz)`
    pub small_jump_second_moment: f64,
}

impl LevyData {
    /// `∫_{|z|>c} |z| ν(dz)`, possibly infinite.
    pub fn large_jump_first_moment(&self, spec: &NoiseSpec, loading: &DMatrix<f64>, c: f64) -> f64 {
        match spec {
            NoiseSpec::CompoundPoisson { intensity, atoms, weights } => {
                let w = normalized_weights(atoms.len(), weights.as_deref());
                atoms
                    .iter()
                    .zip(&w)
                    .map(|(a, wi)| {
                        let z = (loading * DVector::from_column_slice(a)).norm();
                        if z > c {
                            intensity * wi * z
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            NoiseSpec::AlphaStable { alpha, scale, .. } if *alpha < 2.0 => {
                if *alpha <= 1.0 {
                    return f64::INFINITY;
                }
                let k = stable_levy_constant(*alpha) * scale.powf(*alpha);
                loading
                    .column_iter()
                    .map(|col| {
                        let s = col.norm();
                        if s == 0.0 {
                            0.0
                        } else {
                            s * 2.0 * k * (c / s).powf(1.0 - alpha) / (alpha - 1.0)
                        }
                    })
                    .sum()
            }
            NoiseSpec::RedNoise { inner, .. } => self.large_jump_first_moment(inner, loading, c),
            _ => 0.0,
        }
    }
}

/// `c_α` in the Lévy density `c_α scale^α |z|^{−1−α}` of a symmetric
/// α-stable coordinate.
pub fn stable_levy_constant(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Vec<f64> {
    match weights {
        Some(w) => {
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        }
        None => vec![1.0 / n as f64; n],
    }
}

/// Lévy–Itô data of the loaded driver `σL`.
pub fn levy_data(spec: &NoiseSpec, loading: &DMatrix<f64>) -> Result<LevyData> {
    spec.validate()?;
    Ok(match spec {
        NoiseSpec::Brownian { covariance } => {
            let s = matrix_from_rows(covariance)?;
            let eff = loading * s * loading.transpose();
            LevyData { drift_norm: 0.0, gaussian_hs_norm: psd_sqrt(&eff).norm(), small_jump_second_moment: 0.0 }
        }
        NoiseSpec::CompoundPoisson { intensity, atoms, weights } => {
            let w = normalized_weights(atoms.len(), weights.as_deref());
            let mut b = DVector::<f64>::zeros(loading.nrows());
            let mut small = 0.0;
            for (a, wi) in atoms.iter().zip(&w) {
                let z = loading * DVector::from_column_slice(a);
                if z.norm() <= 1.0 {
                    b += &z * (intensity * wi);
                    small += intensity * wi * z.norm_squared();
                }
            }
            LevyData { drift_norm: b.norm(), gaussian_hs_norm: 0.0, small_jump_second_moment: small }
        }
        NoiseSpec::AlphaStable { alpha, scale, .. } => {
            if *alpha == 2.0 {
                let hs = loading.norm() * scale * 2f64.sqrt();
                LevyData { drift_norm: 0.0, gaussian_hs_norm: hs, small_jump_second_moment: 0.0 }
            } else {
                let k = stable_levy_constant(*alpha) * scale.powf(*alpha);
                let small = loading
                    .column_iter()
                    .map(|col| {
                        let s = col.norm();
                        if s == 0.0 {
                            0.0
                        } else {
                            s * s * 2.0 * k * (1.0 / s).powf(2.0 - alpha) / (2.0 - alpha)
                        }
                    })
                    .sum();
                LevyData { drift_norm: 0.0, gaussian_hs_norm: 0.0, small_jump_second_moment: small }
            }
        }
        NoiseSpec::Deterministic { drift } => LevyData {
            drift_norm: (loading * DVector::from_column_slice(drift)).norm(),
            gaussian_hs_norm: 0.0,
            small_jump_second_moment: 0.0,
        },
        NoiseSpec::RedNoise { inner, .. } => levy_data(inner, loading)?,
    })
}

/// Deterministic random stream `stream` of the run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One symmetric α-stable variate with characteristic function
/// `exp(−|u|^α)`, by the Chambers–Mallows–Stuck method.
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    a * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Stateful increment generator for one path.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    kind: Kind,
    dim: usize,
}

#[derive(Debug, Clone)]
enum Kind {
    Brownian { factor: DMatrix<f64> },
    CompoundPoisson { intensity: f64, atoms: Vec<DVector<f64>>, cumulative: Vec<f64> },
    AlphaStable { alpha: f64, scale: f64 },
    Deterministic { drift: DVector<f64> },
    RedNoise { lambda: DMatrix<f64>, inner: Box<NoiseSampler>, state: DVector<f64>, burn_in: f64 },
}

impl NoiseSampler {
    /// Red-noise samplers start at `U = 0`; call [`NoiseSampler::restart`]
    /// to draw a stationary starting state.
    pub fn new(spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim();
        let kind = match spec {
            NoiseSpec::Brownian { covariance } => Kind::Brownian { factor: psd_sqrt(&matrix_from_rows(covariance)?) },
            NoiseSpec::CompoundPoisson { intensity, atoms, weights } => {
                let w = normalized_weights(atoms.len(), weights.as_deref());
                let mut acc = 0.0;
                let cumulative = w
                    .iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect();
                Kind::CompoundPoisson {
                    intensity: *intensity,
                    atoms: atoms.iter().map(|a| DVector::from_column_slice(a)).collect(),
                    cumulative,
                }
            }
            NoiseSpec::AlphaStable { alpha, scale, .. } => Kind::AlphaStable { alpha: *alpha, scale: *scale },
            NoiseSpec::Deterministic { drift } => Kind::Deterministic { drift: DVector::from_column_slice(drift) },
            NoiseSpec::RedNoise { lambda, inner } => {
                let lambda = matrix_from_rows(lambda)?;
                let gap = require_stable(&lambda)?;
                Kind::RedNoise {
                    lambda,
                    inner: Box::new(NoiseSampler::new(inner)?),
                    state: DVector::zeros(dim),
                    burn_in: 20.0 / gap,
                }
            }
        };
        Ok(NoiseSampler { kind, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds the increment over a step of length `dt` to `out`.
    pub fn add_increment<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R, out: &mut [f64]) {
        match &mut self.kind {
            Kind::Brownian { factor } => {
                let k = factor.ncols();
                let sd = dt.sqrt();
                let z: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal) * sd).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o += (0..k).map(|j| factor[(i, j)] * z[j]).sum::<f64>();
                }
            }
            Kind::CompoundPoisson { intensity, atoms, cumulative } => {
                let mean = *intensity * dt;
                let count = if mean > 0.0 {
                    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
                } else {
                    0
                };
                for _ in 0..count {
                    let u: f64 = rng.random();
                    let idx = cumulative.iter().position(|&c| u < c).unwrap_or(atoms.len() - 1);
                    for (o, a) in out.iter_mut().zip(atoms[idx].iter()) {
                        *o += a;
                    }
                }
            }
            Kind::AlphaStable { alpha, scale } => {
                let s = *scale * dt.powf(1.0 / *alpha);
                for o in out.iter_mut() {
                    *o += s * standard_stable(*alpha, rng);
                }
            }
            Kind::Deterministic { drift } => {
                for (o, b) in out.iter_mut().zip(drift.iter()) {
                    *o += b * dt;
                }
            }
            Kind::RedNoise { lambda, inner, state, .. } => {
                let mut d = vec![0.0; state.len()];
                inner.add_increment(dt, rng, &mut d);
                let drift = &*lambda * &*state;
                for i in 0..d.len() {
                    d[i] -= drift[i] * dt;
                    state[i] += d[i];
                    out[i] += d[i];
                }
            }
        }
    }

    /// Increment over a step of length `dt`.
    pub fn increment<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> DVector<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_increment(dt, rng, &mut out);
        DVector::from_vec(out)
    }

    /// Redraws the red-noise state from (approximately) its stationary law
    /// by an Euler burn-in of length `20 / min Re λ(Λ)`. No effect for
    /// white drivers.
    pub fn restart<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Kind::RedNoise { lambda, inner, state, burn_in } = &mut self.kind {
            inner.restart(rng);
            let dt = 1e-2f64.min(0.05 / spectral_norm(lambda).max(1e-300));
            let steps = (*burn_in / dt).ceil() as usize;
            let mut u = DVector::<f64>::zeros(state.len());
            let mut d = vec![0.0; state.len()];
            for _ in 0..steps {
                d.iter_mut().for_each(|v| *v = 0.0);
                inner.add_increment(dt, rng, &mut d);
                let drift = &*lambda * &u;
                for i in 0..d.len() {
                    u[i] += d[i] - drift[i] * dt;
                }
            }
            *state = u;
        }
    }

    /// Current red-noise state, `None` for white drivers.
    pub fn state(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            Kind::RedNoise { state, .. } => Some(state),
            _ => None,
        }
    }
}

/// Single increment of the driver over `dt` (red noise starts from its
/// stationary law).
pub fn sample_increment<R: Rng + ?Sized>(spec: &NoiseSpec, dt: f64, rng: &mut R) -> Result<DVector<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::DomainError(format!("time step must be positive, got {dt}")));
    }
    let mut s = NoiseSampler::new(spec)?;
    s.restart(rng);
    Ok(s.increment(dt, rng))
}

/// A draw of the red-noise state `U₀` from its stationary law.
pub fn red_noise_state<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> Result<DVector<f64>> {
    if !matches!(spec, NoiseSpec::RedNoise { .. }) {
        return Err(Error::Config("red_noise_state needs a red-noise driver".into()));
    }
    let mut s = NoiseSampler::new(spec)?;
    s.restart(rng);
    Ok(s.state().cloned().expect("red noise has a state"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_gate_for_stable_noise() {
        let s = NoiseSpec::AlphaStable { alpha: 1.5, scale: 1.0, dim: 1 };
        assert!(validate_moment(&s, 1.0));
        assert!(validate_moment(&s, 1.49));
        assert!(!validate_moment(&s, 1.5));
        assert!(!validate_moment(&s, 2.0));
        let b = NoiseSpec::brownian(&DMatrix::identity(2, 2));
        assert!(validate_moment(&b, 50.0));
    }

    #[test]
    fn red_noise_inherits_the_gate() {
        let s = NoiseSpec::RedNoise {
            lambda: vec![vec![1.0]],
            inner: Box::new(NoiseSpec::AlphaStable { alpha: 1.2, scale: 1.0, dim: 1 }),
        };
        assert!(!validate_moment(&s, 1.2));
        assert!(validate_moment(&s, 1.1));
    }

    #[test]
    fn deterministic_increment_is_exact() {
        let s = NoiseSpec::Deterministic { drift: vec![1.0, -2.0] };
        let mut rng = stream_rng(1, 0);
        let inc = sample_increment(&s, 0.5, &mut rng).unwrap();
        assert_eq!(inc.as_slice(), &[0.5, -1.0]);
    }

    #[test]
    fn cauchy_case_of_the_stable_sampler() {
        let mut rng = stream_rng(3, 0);
        let n = 200_000;
        let inside = (0..n).filter(|_| standard_stable(1.0, &mut rng).abs() <= 1.0).count();
        assert!((inside as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn stable_with_alpha_two_is_gaussian_with_variance_two() {
        let mut rng = stream_rng(4, 0);
        let n = 200_000;
        let m2 = (0..n).map(|_| standard_stable(2.0, &mut rng).powi(2)).sum::<f64>() / n as f64;
        assert!((m2 - 2.0).abs() < 0.03);
    }

    #[test]
    fn compound_poisson_mean() {
        let s = NoiseSpec::CompoundPoisson { intensity: 3.0, atoms: vec![vec![1.0], vec![-0.5]], weights: Some(vec![0.5, 0.5]) };
        let mut sampler = NoiseSampler::new(&s).unwrap();
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sampler.increment(1.0, &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.75).abs() < 0.02);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(NoiseSpec::AlphaStable { alpha: 2.5, scale: 1.0, dim: 1 }.validate().is_err());
        assert!(NoiseSpec::Brownian { covariance: vec![vec![1.0, 2.0], vec![0.0, 1.0]] }.validate().is_err());
        assert!(NoiseSpec::Brownian { covariance: vec![vec![-1.0]] }.validate().is_err());
        let unstable = NoiseSpec::RedNoise { lambda: vec![vec![-1.0]], inner: Box::new(NoiseSpec::brownian(&DMatrix::identity(1, 1))) };
        assert!(matches!(unstable.validate(), Err(Error::UnstableDrift { .. })));
    }

    #[test]
    fn config_round_trip() {
        let s = NoiseSpec::RedNoise { lambda: vec![vec![2.0]], inner: Box::new(NoiseSpec::AlphaStable { alpha: 1.5, scale: 0.3, dim: 1 }) };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"type\":\"red_noise\""));
        assert_eq!(serde_json::from_str::<NoiseSpec>(&text).unwrap(), s);
    }
}
