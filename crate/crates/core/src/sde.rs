//! Sampling `X^ε_t(x) = e^{−Qt}x + ε𝒪_t` and the stationary law `𝒪_∞`.
//!
//! Brownian drivers use exact Gaussian marginals. Other drivers use the
//! Euler scheme `X_{k+1} = X_k − QX_k dt + εσΔL_k`.
//!
//! Samples are produced in fixed chunks, chunk `c` drawing from
//! `stream_rng(seed, ·)` streams derived from `c` only, so results do not
//! depend on the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{lyapunov_solve, matrix_exponential, min_real_part, propagator, psd_sqrt, require_stable, spectral_norm};
use crate::noise::{require_moment, stream_rng, NoiseSampler, NoiseSpec};
use crate::system::SystemSpec;
use crate::wasserstein::{wasserstein, EmpiricalMeasure};

const CHUNK: usize = 256;
/// Euler steps must satisfy `dt·‖Q‖ ≤ MAX_STEP_NORM`.
pub const MAX_STEP_NORM: f64 = 0.5;
/// Stationary samples are simulated to `STATIONARY_HORIZON / min Re λ(Q)`.
pub const STATIONARY_HORIZON: f64 = 30.0;
const VAN_LOAN_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub seed: u64,
    /// Euler step; `None` means `min(1e−3, 0.05/‖Q‖)`.
    pub dt: Option<f64>,
}

impl SimOptions {
    pub fn new(seed: u64) -> Self {
        SimOptions { seed, dt: None }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }
}

/// Default Euler step `min(1e−3, 0.05/‖Q‖)`.
pub fn default_step(q: &DMatrix<f64>) -> f64 {
    let norm = spectral_norm(q);
    if norm > 0.0 {
        1e-3f64.min(0.05 / norm)
    } else {
        1e-3
    }
}

fn step_for(q: &DMatrix<f64>, opts: &SimOptions) -> Result<f64> {
    let dt = opts.dt.unwrap_or_else(|| default_step(q));
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::DomainError(format!("time step must be positive, got {dt}")));
    }
    let norm = spectral_norm(q);
    if dt * norm > MAX_STEP_NORM {
        return Err(Error::StepTooLarge { dt, norm });
    }
    Ok(dt)
}

/// `Σ_t = ∫₀ᵗ e^{−Qs} S e^{−Qᵀs} ds` for a source covariance `S = σΣσᵀ`.
///
/// Short horizons use the block exponential of `[[−Q, S], [0, Qᵀ]]`,
/// long ones `Σ∞ − e^{−Qt} Σ∞ e^{−Qᵀt}`.
pub fn gaussian_covariance(q: &DMatrix<f64>, s: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let d = q.nrows();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::DomainError(format!("time must be non-negative, got {t}")));
    }
    if s.nrows() != d || s.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: s.nrows() });
    }
    if t == 0.0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let sigma = if t * spectral_norm(q) <= VAN_LOAN_LIMIT {
        let mut c = DMatrix::<f64>::zeros(2 * d, 2 * d);
        c.view_mut((0, 0), (d, d)).copy_from(&(-q * t));
        c.view_mut((0, d), (d, d)).copy_from(&(s * t));
        c.view_mut((d, d), (d, d)).copy_from(&(q.transpose() * t));
        let e = matrix_exponential(&c)?;
        let decay = e.view((0, 0), (d, d)).into_owned();
        e.view((0, d), (d, d)) * decay.transpose()
    } else {
        let inf = lyapunov_solve(q, s)?;
        let e = propagator(q, t)?;
        &inf - &e * &inf * e.transpose()
    };
    Ok((&sigma + sigma.transpose()) * 0.5)
}

/// `Σ∞ = lim Σ_t`, the solution of `QΣ + ΣQᵀ = S`.
pub fn stationary_covariance(q: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lyapunov_solve(q, s)
}

fn gate(sys: &SystemSpec) -> Result<()> {
    sys.validate()?;
    require_stable(&sys.drift)?;
    require_moment(&sys.noise, sys.order)
}

fn chunks(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(n - c * CHUNK))).collect()
}

fn gather(n: usize, d: usize, parts: Vec<Vec<f64>>) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new(n, d, parts.concat())
}

fn standard_normals<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DVector<f64> {
    DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Samples of `X^ε_t(x)` paired with samples of `ε𝒪_∞` built from the same
/// random numbers (common random numbers).
///
/// Gaussian drivers: `X = e^{−Qt}x + εΣ_t^{1/2}z` and `εΣ∞^{1/2}z` with the
/// same `z`. Other drivers: one Euler path is run for `max(T*, t) − t` from
/// zero, then for `t` more with each increment added both to that path and
/// to the path of `X` started at `x`; the first path's end point is the
/// stationary sample.
#[derive(Debug, Clone)]
pub struct CoupledSample {
    pub state: EmpiricalMeasure,
    pub stationary: EmpiricalMeasure,
}

pub fn simulate_coupled(sys: &SystemSpec, eps: f64, t: f64, n: usize, opts: &SimOptions) -> Result<CoupledSample> {
    gate(sys)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::DomainError(format!("noise level must be non-negative, got {eps}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::DomainError(format!("time must be non-negative, got {t}")));
    }
    if n == 0 {
        return Err(Error::DomainError("sample count must be positive".into()));
    }
    let d = sys.dim();
    let q = &sys.drift;
    match sys.gaussian_source() {
        Some(s) => {
            let mean = propagator(q, t)? * &sys.initial_state;
            let root_t = psd_sqrt(&gaussian_covariance(q, &s, t)?) * eps;
            let root_inf = psd_sqrt(&stationary_covariance(q, &s)?) * eps;
            let parts: Vec<(Vec<f64>, Vec<f64>)> = chunks(n)
                .into_par_iter()
                .map(|(c, m)| {
                    let mut rng = stream_rng(opts.seed, c as u64);
                    let mut xs = Vec::with_capacity(m * d);
                    let mut os = Vec::with_capacity(m * d);
                    for _ in 0..m {
                        let z = standard_normals(&mut rng, d);
                        xs.extend((&mean + &root_t * &z).iter());
                        os.extend((&root_inf * &z).iter());
                    }
                    (xs, os)
                })
                .collect();
            let (xs, os): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            Ok(CoupledSample { state: gather(n, d, xs)?, stationary: gather(n, d, os)? })
        }
        None => {
            let dt = step_for(q, opts)?;
            let horizon = STATIONARY_HORIZON / min_real_part(q)?;
            let burn = (horizon - t).max(0.0);
            let sampler = NoiseSampler::new(&sys.noise)?;
            let parts: Vec<(Vec<f64>, Vec<f64>)> = chunks(n)
                .into_par_iter()
                .map(|(c, m)| {
                    let mut rng = stream_rng(opts.seed, c as u64);
                    let mut noise = sampler.clone();
                    let mut xs = Vec::with_capacity(m * d);
                    let mut os = Vec::with_capacity(m * d);
                    for _ in 0..m {
                        noise.restart(&mut rng);
                        let mut o = DVector::<f64>::zeros(d);
                        euler(q, &sys.loading, 1.0, burn, dt, &mut noise, &mut rng, &mut [&mut o]);
                        let mut x = sys.initial_state.clone();
                        euler(q, &sys.loading, eps, t, dt, &mut noise, &mut rng, &mut [&mut x, &mut o]);
                        xs.extend(x.iter());
                        os.extend((o * eps).iter());
                    }
                    (xs, os)
                })
                .collect();
            let (xs, os): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            Ok(CoupledSample { state: gather(n, d, xs)?, stationary: gather(n, d, os)? })
        }
    }
}

/// Advances every state by `t` with a common Euler increment; the first
/// state sees the driver scaled by `eps`, the rest by 1.
#[allow(clippy::too_many_arguments)]
fn euler<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    loading: &DMatrix<f64>,
    eps: f64,
    t: f64,
    dt: f64,
    noise: &mut NoiseSampler,
    rng: &mut R,
    states: &mut [&mut DVector<f64>],
) {
    if t <= 0.0 {
        return;
    }
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let k = noise.dim();
    let mut inc = vec![0.0; k];
    for _ in 0..steps {
        inc.iter_mut().for_each(|v| *v = 0.0);
        noise.add_increment(h, rng, &mut inc);
        let kick = loading * DVector::from_column_slice(&inc);
        for (idx, x) in states.iter_mut().enumerate() {
            let drift = q * &**x * h;
            let scale = if idx == 0 { eps } else { 1.0 };
            **x -= drift;
            x.axpy(scale, &kick, 1.0);
        }
    }
}

/// `n` samples of `X^ε_t(x)`.
pub fn simulate_marginal(sys: &SystemSpec, eps: f64, t: f64, n: usize, opts: &SimOptions) -> Result<EmpiricalMeasure> {
    gate(sys)?;
    if !(eps >= 0.0 && eps.is_finite()) || !(t >= 0.0 && t.is_finite()) || n == 0 {
        return Err(Error::DomainError(format!("invalid sampling request eps={eps} t={t} n={n}")));
    }
    let d = sys.dim();
    let q = &sys.drift;
    if let Some(s) = sys.gaussian_source() {
        let mean = propagator(q, t)? * &sys.initial_state;
        let root = psd_sqrt(&gaussian_covariance(q, &s, t)?) * eps;
        let parts: Vec<Vec<f64>> = chunks(n)
            .into_par_iter()
            .map(|(c, m)| {
                let mut rng = stream_rng(opts.seed, c as u64);
                (0..m).flat_map(|_| (&mean + &root * standard_normals(&mut rng, d)).data.as_vec().clone()).collect()
            })
            .collect();
        return gather(n, d, parts);
    }
    euler_marginal(sys, eps, t, n, opts)
}

/// Euler samples of `X^ε_t(x)` for any driver, Brownian included.
pub fn euler_marginal(sys: &SystemSpec, eps: f64, t: f64, n: usize, opts: &SimOptions) -> Result<EmpiricalMeasure> {
    gate(sys)?;
    let d = sys.dim();
    let q = &sys.drift;
    let dt = step_for(q, opts)?;
    let sampler = NoiseSampler::new(&sys.noise)?;
    let parts: Vec<Vec<f64>> = chunks(n)
        .into_par_iter()
        .map(|(c, m)| {
            let mut rng = stream_rng(opts.seed, c as u64);
            let mut noise = sampler.clone();
            let mut out = Vec::with_capacity(m * d);
            for _ in 0..m {
                noise.restart(&mut rng);
                let mut x = sys.initial_state.clone();
                euler(q, &sys.loading, eps, t, dt, &mut noise, &mut rng, &mut [&mut x]);
                out.extend(x.iter());
            }
            out
        })
        .collect();
    gather(n, d, parts)
}

/// `n` samples of `𝒪_∞` (noise level 1).
///
/// Exact for Brownian (`N(0, Σ∞)`) and deterministic (`Q⁻¹σb`) drivers,
/// otherwise Euler from zero to `30 / min Re λ(Q)`.
pub fn stationary_sample(sys: &SystemSpec, n: usize, opts: &SimOptions) -> Result<EmpiricalMeasure> {
    gate(sys)?;
    if n == 0 {
        return Err(Error::DomainError("sample count must be positive".into()));
    }
    let d = sys.dim();
    let q = &sys.drift;
    if let Some(s) = sys.gaussian_source() {
        let root = psd_sqrt(&stationary_covariance(q, &s)?);
        let parts: Vec<Vec<f64>> = chunks(n)
            .into_par_iter()
            .map(|(c, m)| {
                let mut rng = stream_rng(opts.seed, c as u64);
                (0..m).flat_map(|_| (&root * standard_normals(&mut rng, d)).data.as_vec().clone()).collect()
            })
            .collect();
        return gather(n, d, parts);
    }
    if let NoiseSpec::Deterministic { drift } = &sys.noise {
        let b = &sys.loading * DVector::from_column_slice(drift);
        let fixed = q.clone().lu().solve(&b).ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
        return gather(n, d, vec![fixed.iter().copied().cycle().take(n * d).collect()]);
    }
    let horizon = STATIONARY_HORIZON / min_real_part(q)?;
    let start = SystemSpec { initial_state: DVector::zeros(d), ..sys.clone() };
    euler_marginal(&start, 1.0, horizon, n, opts)
}

/// Recorded marginals of one batch of paths.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub times: Vec<f64>,
    /// `states[k]` holds the `n` samples at `times[k]`.
    pub states: Vec<EmpiricalMeasure>,
}

/// Marginals of the same `n` paths at increasing `times`. Brownian drivers
/// step exactly between recorded times; others use Euler.
pub fn simulate_paths(sys: &SystemSpec, eps: f64, times: &[f64], n: usize, opts: &SimOptions) -> Result<PathBatch> {
    gate(sys)?;
    if times.is_empty() || n == 0 {
        return Err(Error::DomainError("need at least one time and one path".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::DomainError("recording times must be finite, non-negative and sorted".into()));
    }
    let d = sys.dim();
    let q = &sys.drift;
    let gaussian = sys.gaussian_source();
    let mut steps = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        let h = t - prev;
        let transition = match &gaussian {
            Some(s) => Some((propagator(q, h)?, psd_sqrt(&gaussian_covariance(q, s, h)?) * eps)),
            None => None,
        };
        steps.push((h, transition));
        prev = t;
    }
    let dt = if gaussian.is_none() { step_for(q, opts)? } else { 0.0 };
    let sampler = NoiseSampler::new(&sys.noise)?;
    let parts: Vec<Vec<Vec<f64>>> = chunks(n)
        .into_par_iter()
        .map(|(c, m)| {
            let mut rng = stream_rng(opts.seed, c as u64);
            let mut noise = sampler.clone();
            let mut per_time = vec![Vec::with_capacity(m * d); times.len()];
            for _ in 0..m {
                noise.restart(&mut rng);
                let mut x = sys.initial_state.clone();
                for (k, (h, transition)) in steps.iter().enumerate() {
                    match transition {
                        Some((e, root)) => x = e * &x + root * standard_normals(&mut rng, d),
                        None => euler(q, &sys.loading, eps, *h, dt, &mut noise, &mut rng, &mut [&mut x]),
                    }
                    per_time[k].extend(x.iter());
                }
            }
            per_time
        })
        .collect();
    let mut states = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        states.push(gather(n, d, parts.iter().map(|p| p[k].clone()).collect())?);
    }
    Ok(PathBatch { times: times.to_vec(), states })
}

/// Empirical `𝒲_{p'}(𝒪_t, 𝒪_∞)` on a time grid, from coupled samples
/// started at zero.
pub fn ou_distance_decay(sys: &SystemSpec, times: &[f64], n: usize, p: f64, opts: &SimOptions) -> Result<Vec<f64>> {
    let zero = SystemSpec { initial_state: DVector::zeros(sys.dim()), ..sys.clone() };
    times
        .iter()
        .map(|&t| {
            let c = simulate_coupled(&zero, 1.0, t, n, opts)?;
            wasserstein(&c.state, &c.stationary, p)
        })
        .collect()
}
