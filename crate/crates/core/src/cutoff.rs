//! Quantitative cutoff predictions: the time scale `t_ε`, the profile, the
//! sandwich around the renormalised distance, error bounds and the range of
//! noise levels where the asymptotics are observable.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigen_structure, min_real_part, propagator, spectral_norm, DEFAULT_CLUSTER_TOL};
use crate::noise::{levy_data, require_moment};
use crate::sde::{stationary_sample, SimOptions};
use crate::spectral::{decompose, normal_growth, NormalGrowthVerdict, SpectralDecomposition, DEFAULT_GEOMETRY_TOL};
use crate::system::SystemSpec;
use crate::wasserstein::empirical_moment;

const GROWTH_GRID: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `𝒲/ε → e^{−r𝔮w}|v|/𝔮^{ℓ−1}`.
    ExplicitProfile,
    /// A limit profile exists but is only given as a Wasserstein distance
    /// to the stationary law.
    AbstractProfile,
    /// Divergence as `r → −∞` and vanishing as `r → +∞`, no limit profile.
    WindowOnly,
}

/// `t_ε = |ln ε|/𝔮 + ((ℓ−1)/𝔮)·ln|ln ε|`.
pub fn cutoff_time(rate: f64, multiplicity: usize, eps: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) || multiplicity == 0 {
        return Err(Error::DomainError(format!("need 𝔮 > 0 and ℓ ≥ 1, got {rate}, {multiplicity}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DomainError(format!("noise level must lie in (0, 1), got {eps}")));
    }
    if multiplicity > 1 && eps >= (-1.0f64).exp() {
        return Err(Error::DomainError(format!("with ℓ > 1 the noise level must be below 1/e, got {eps}")));
    }
    let l = eps.ln().abs();
    Ok(l / rate + (multiplicity as f64 - 1.0) / rate * l.ln())
}

/// `C₀` and `q*` with `‖e^{−Qt}‖ ≤ C₀e^{−q*t}` for all `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstant {
    pub c0: f64,
    pub q_star: f64,
}

/// `q* = q/2` with `q = min Re λ(Q)`, and `C₀` the larger of
/// `sup_s max_{j<m} s^j e^{−(q−q*)s}/j!` (`m` the longest Jordan chain, `d`
/// if the Jordan structure is ill-conditioned) and the sampled supremum of
/// `‖e^{−Qt}‖e^{q*t}`.
pub fn growth_constant(q: &DMatrix<f64>) -> Result<GrowthConstant> {
    let qmin = min_real_part(q)?;
    if qmin <= 0.0 {
        return Err(Error::UnstableDrift { min_real_part: qmin });
    }
    let d = q.nrows();
    let q_star = qmin / 2.0;
    let a = qmin - q_star;
    let mut closed: f64 = 1.0;
    let mut log_fact = 0.0;
    let longest = eigen_structure(q, DEFAULT_CLUSTER_TOL)
        .map(|es| es.blocks.iter().map(|b| b.index()).max().unwrap_or(1))
        .unwrap_or(d);
    for j in 1..longest {
        log_fact += (j as f64).ln();
        let jf = j as f64;
        closed = closed.max((jf * (jf / a).ln() - jf - log_fact).exp());
    }
    let horizon = (2.0 * d as f64 + 20.0) / qmin;
    let h = horizon / GROWTH_GRID as f64;
    let step = propagator(q, h)?;
    let mut e = DMatrix::<f64>::identity(d, d);
    let mut sampled: f64 = 1.0;
    for k in 1..=GROWTH_GRID {
        e = &e * &step;
        sampled = sampled.max(spectral_norm(&e) * (q_star * h * k as f64).exp());
    }
    Ok(GrowthConstant { c0: closed.max(sampled), q_star })
}

/// `E|𝒪_∞|^{min(1,p)}`: a Monte Carlo estimate and the analytic bound
/// `|b|C₀/q* + |Σ^{1/2}|C₀/√(2q*) + (C₀/q*)√∫_{|z|≤1}|z|²ν + exp((C₀/q*)∫_{|z|>1/C₀}|z|ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryMoment {
    pub order: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub analytic_bound: f64,
}

pub fn stationary_moment_bound(sys: &SystemSpec, growth: &GrowthConstant) -> Result<f64> {
    let data = levy_data(&sys.noise, &sys.loading)?;
    let GrowthConstant { c0, q_star } = *growth;
    let big = data.large_jump_first_moment(&sys.noise, &sys.loading, 1.0 / c0);
    Ok(data.drift_norm * c0 / q_star
        + data.gaussian_hs_norm * c0 / (2.0 * q_star).sqrt()
        + c0 / q_star * data.small_jump_second_moment.sqrt()
        + (c0 / q_star * big).exp())
}

pub fn estimate_stationary_moment(
    sys: &SystemSpec,
    growth: &GrowthConstant,
    samples: usize,
    opts: &SimOptions,
) -> Result<StationaryMoment> {
    let order = sys.order.min(1.0);
    let s = stationary_sample(sys, samples, opts)?;
    let values: Vec<f64> =
        s.points().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(order)).collect();
    let mean = empirical_moment(&s, order);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len().max(2) - 1) as f64;
    Ok(StationaryMoment {
        order,
        monte_carlo: mean,
        standard_error: (var / values.len() as f64).sqrt(),
        samples,
        analytic_bound: stationary_moment_bound(sys, growth)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorConstants {
    pub c0: f64,
    pub q_star: f64,
    /// `𝔤`, absent when no faster eigenvalue participates.
    pub gap: Option<f64>,
    /// `K(x) = max_λ |P_λ x|`, an upper-bound choice.
    pub component_bound: f64,
}

/// Noise levels where both error terms stay below `η/2` and `2t_ε ≤ T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonInterval {
    pub lo: f64,
    pub hi: f64,
    pub horizon: f64,
    pub tolerance: f64,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub verdict: Verdict,
    pub rate: f64,
    pub multiplicity: usize,
    pub order: f64,
    /// `|v|/𝔮^{ℓ−1}` with `v = Σ_k v_k`.
    pub profile_amplitude: f64,
    pub window: f64,
    pub constants: ErrorConstants,
    /// The stationary first moment entering the error terms.
    pub stationary_moment: f64,
    pub epsilon_interval: EpsilonInterval,
    pub resonant: bool,
}

/// `𝒫_x(r) = e^{−r𝔮w}|v|/𝔮^{ℓ−1}`.
pub fn profile_value(report: &CutoffReport, r: f64) -> Result<f64> {
    if report.verdict != Verdict::ExplicitProfile {
        return Err(Error::NoProfile);
    }
    Ok((-r * report.rate * report.window).exp() * report.profile_amplitude)
}

/// Bounds on the renormalised distance `𝒲_{p}(X^ε_t, μ^ε)/ε^{min(1,p)}`
/// given `𝒲_p(𝒪_t, 𝒪_∞)`.
///
/// For `p ≥ 1`: `|e^{−Qt}x|/ε ∓ 𝒲`. For `p < 1` the centre is bracketed
/// by `max(c^p − 2E|𝒪_∞|^p, 0) ≤ · ≤ c^p` with `c = |e^{−Qt}x|/ε`.
pub fn sandwich_bounds(
    q: &DMatrix<f64>,
    x: &DVector<f64>,
    t: f64,
    eps: f64,
    ou_distance: f64,
    p: f64,
    stationary_moment: f64,
) -> Result<(f64, f64)> {
    if !(t >= 0.0) || !(eps > 0.0) {
        return Err(Error::DomainError(format!("need t ≥ 0 and ε > 0, got {t}, {eps}")));
    }
    let c = (propagator(q, t)? * x).norm() / eps;
    if p >= 1.0 {
        Ok((c - ou_distance, c + ou_distance))
    } else {
        let up = c.powf(p);
        Ok(((up - 2.0 * stationary_moment).max(0.0) - ou_distance, up + ou_distance))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    Diverges,
    Vanishes,
}

/// Behaviour of `𝒲(X^ε_{δt_ε}, μ^ε)/ε` as `ε → 0`.
pub fn dichotomy_prediction(rate: f64, multiplicity: usize, delta: f64) -> Result<Dichotomy> {
    if !(rate > 0.0) || multiplicity == 0 {
        return Err(Error::DomainError(format!("need 𝔮 > 0 and ℓ ≥ 1, got {rate}, {multiplicity}")));
    }
    if !(delta > 0.0 && delta.is_finite()) || delta == 1.0 {
        return Err(Error::DomainError(format!("δ must be positive and different from 1, got {delta}")));
    }
    Ok(if delta < 1.0 { Dichotomy::Diverges } else { Dichotomy::Vanishes })
}

/// `C₀E|𝒪_∞|ε + K(x)ε^{𝔤/𝔮}e^{−(𝔮+𝔤)rw}`; the second term is dropped
/// when no gap exists.
pub fn error_bound(report: &CutoffReport, eps: f64, r: f64) -> f64 {
    let c = &report.constants;
    let first = c.c0 * report.stationary_moment * eps;
    let second = match c.gap {
        Some(g) => c.component_bound * eps.powf(g / report.rate) * (-(report.rate + g) * r * report.window).exp(),
        None => 0.0,
    };
    first + second
}

/// Solves `e^{−𝔮T/2}`-type lower and error-driven upper limits for ε.
///
/// The lower end is the smallest ε with `2t_ε ≤ T` (a root of the full
/// `t_ε` when `ℓ > 1`); the upper end is
/// `min(η/(2C₀E|𝒪_∞|), (η/2K)^{𝔮/𝔤})`, kept inside the domain of `t_ε`.
pub fn epsilon_window(report: &CutoffReport, horizon: f64, eta: f64) -> Result<EpsilonInterval> {
    if !(horizon > 0.0) || !(eta > 0.0) {
        return Err(Error::DomainError(format!("need T > 0 and η > 0, got {horizon}, {eta}")));
    }
    let (rate, ell) = (report.rate, report.multiplicity);
    let ceiling = if ell > 1 { (-1.0f64).exp() * (1.0 - f64::EPSILON) } else { 1.0 - f64::EPSILON };
    let lo = if ell == 1 {
        (-rate * horizon / 2.0).exp().max(f64::MIN_POSITIVE)
    } else if 2.0 * cutoff_time(rate, ell, ceiling)? > horizon {
        ceiling
    } else {
        // t_ε decreases in ε; bisect on ln ε.
        let mut a = (-rate * horizon / 2.0).max(f64::MIN_POSITIVE.ln());
        let mut b = ceiling.ln();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if 2.0 * cutoff_time(rate, ell, m.exp())? > horizon {
                a = m;
            } else {
                b = m;
            }
        }
        b.exp()
    };
    let c = &report.constants;
    let mut hi = eta / (2.0 * c.c0 * report.stationary_moment);
    if let Some(g) = c.gap {
        hi = hi.min((eta / (2.0 * c.component_bound)).powf(rate / g));
    }
    let hi = hi.min(ceiling);
    let lo_ok = 2.0 * cutoff_time(rate, ell, lo)? <= horizon;
    Ok(EpsilonInterval { lo, hi, horizon, tolerance: eta, empty: lo > hi || !lo_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MomentPrediction {
    /// `E|X|^{p'}/ε^{p'} → E|𝒪_∞|^{p'}`.
    Asymptote(f64),
    Diverges,
}

/// Limit of `E|X^ε_{t_ε+rw}|^{p'}/ε^{p'}` as `ε → 0` and then `r → ±∞`:
/// the stationary moment for `r = +∞` (and as the large-`r` asymptote for
/// finite `r`), divergence for `r = −∞`.
pub fn moment_cutoff_prediction(p: f64, stationary_moment: f64, r: f64) -> Result<MomentPrediction> {
    if !(p > 0.0) || !(stationary_moment >= 0.0) || r.is_nan() {
        return Err(Error::DomainError(format!("invalid moment prediction input p={p} E={stationary_moment} r={r}")));
    }
    Ok(if r == f64::NEG_INFINITY { MomentPrediction::Diverges } else { MomentPrediction::Asymptote(stationary_moment) })
}

/// Settings for [`analyze_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffOptions {
    pub window: f64,
    /// `T` in the ε-interval.
    pub horizon: f64,
    /// `η` in the ε-interval.
    pub tolerance: f64,
    pub stationary_samples: usize,
    pub geometry_tol: f64,
    pub cluster_tol: f64,
    pub sim: SimOptions,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            window: 1.0,
            horizon: 1000.0,
            tolerance: 0.1,
            stationary_samples: 100_000,
            geometry_tol: DEFAULT_GEOMETRY_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            sim: SimOptions::new(0),
        }
    }
}

/// Everything known about the cutoff of one system.
#[derive(Debug, Clone)]
pub struct CutoffAnalysis {
    pub decomposition: SpectralDecomposition,
    pub normal_growth: NormalGrowthVerdict,
    pub growth: GrowthConstant,
    pub moment: StationaryMoment,
    pub report: CutoffReport,
}

/// Profile for `p ≥ 1` when `ω(x)` lies on a sphere; for `p < 1` an
/// abstract profile when `ω(x)` is a single point; window cutoff otherwise.
pub fn classify(order: f64, dec: &SpectralDecomposition, verdict: &NormalGrowthVerdict) -> Verdict {
    if order >= 1.0 {
        if verdict.profile_exists {
            Verdict::ExplicitProfile
        } else {
            Verdict::WindowOnly
        }
    } else if dec.rotations.is_empty() {
        Verdict::AbstractProfile
    } else {
        Verdict::WindowOnly
    }
}

pub fn analyze_cutoff(sys: &SystemSpec, opts: &CutoffOptions) -> Result<CutoffAnalysis> {
    sys.validate()?;
    if !(opts.window > 0.0 && opts.window.is_finite()) {
        return Err(Error::DomainError(format!("window must be positive, got {}", opts.window)));
    }
    let dec = decompose(&sys.drift, &sys.initial_state, opts.cluster_tol)?;
    require_moment(&sys.noise, sys.order)?;
    let ng = normal_growth(&dec, opts.geometry_tol);
    let growth = growth_constant(&sys.drift)?;
    let moment = estimate_stationary_moment(sys, &growth, opts.stationary_samples, &opts.sim)?;
    let verdict = classify(sys.order, &dec, &ng);
    let mut report = CutoffReport {
        verdict,
        rate: dec.rate,
        multiplicity: dec.multiplicity,
        order: sys.order,
        profile_amplitude: ng.representative_norm / dec.rate.powi(dec.multiplicity as i32 - 1),
        window: opts.window,
        constants: ErrorConstants {
            c0: growth.c0,
            q_star: growth.q_star,
            gap: dec.gap,
            component_bound: dec.component_bound,
        },
        stationary_moment: moment.analytic_bound,
        epsilon_interval: EpsilonInterval { lo: 0.0, hi: 0.0, horizon: opts.horizon, tolerance: opts.tolerance, empty: true },
        resonant: ng.resonant,
    };
    report.epsilon_interval = epsilon_window(&report, opts.horizon, opts.tolerance)?;
    Ok(CutoffAnalysis { decomposition: dec, normal_growth: ng, growth, moment, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(rate: f64, ell: usize, gap: Option<f64>, c0e: f64, k: f64) -> CutoffReport {
        CutoffReport {
            verdict: Verdict::ExplicitProfile,
            rate,
            multiplicity: ell,
            order: 1.0,
            profile_amplitude: 1.0,
            window: 1.0,
            constants: ErrorConstants { c0: 1.0, q_star: rate / 2.0, gap, component_bound: k },
            stationary_moment: c0e,
            epsilon_interval: EpsilonInterval { lo: 0.0, hi: 0.0, horizon: 1.0, tolerance: 1.0, empty: true },
            resonant: false,
        }
    }

    #[test]
    fn time_scale_values() {
        assert!((cutoff_time(1.0, 1, (-5.0f64).exp()).unwrap() - 5.0).abs() < 1e-12);
        assert!((cutoff_time(2.0, 1, (-5.0f64).exp()).unwrap() - 2.5).abs() < 1e-12);
        let crit = cutoff_time(1.0, 2, (-10.0f64).exp()).unwrap();
        assert!((crit - (10.0 + 10f64.ln())).abs() < 1e-12);
        assert!(cutoff_time(1.0, 1, 1.0).is_err());
        assert!(cutoff_time(1.0, 2, 0.5).is_err());
    }

    #[test]
    fn window_example() {
        let w = epsilon_window(&report(1.0, 1, Some(1.0), 1.0, 1.0), 40.0, 0.1).unwrap();
        assert!((w.lo - (-20.0f64).exp()).abs() < 1e-20);
        assert!((w.hi - 0.05).abs() < 1e-15);
        assert!(!w.empty);
        let tight = epsilon_window(&report(1.0, 1, Some(1.0), 1.0, 1.0), 0.01, 1e-9).unwrap();
        assert!(tight.empty);
    }

    #[test]
    fn growth_constant_of_normal_matrix_is_one() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -3.0, 1.0]);
        let g = growth_constant(&q).unwrap();
        assert!((g.c0 - 1.0).abs() < 1e-9);
        assert!((g.q_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dichotomy_cases() {
        assert_eq!(dichotomy_prediction(1.0, 1, 0.5).unwrap(), Dichotomy::Diverges);
        assert_eq!(dichotomy_prediction(1.0, 1, 2.0).unwrap(), Dichotomy::Vanishes);
        assert!(dichotomy_prediction(1.0, 1, 1.0).is_err());
    }

    #[test]
    fn sandwich_centre() {
        let q = DMatrix::<f64>::identity(2, 2);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let eps = 1e-3f64;
        let (lo, hi) = sandwich_bounds(&q, &x, eps.ln().abs(), eps, 0.0, 2.0, 0.0).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_requires_explicit_verdict() {
        let mut r = report(1.0, 1, None, 1.0, 1.0);
        assert_eq!(profile_value(&r, 0.0).unwrap(), 1.0);
        r.verdict = Verdict::WindowOnly;
        assert!(matches!(profile_value(&r, 0.0), Err(Error::NoProfile)));
    }
}
