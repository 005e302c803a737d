use nalgebra::DVector;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::cutoff::{
    analyze_cutoff, cutoff_time, error_bound, moment_cutoff_prediction, profile_value, sandwich_bounds, CutoffAnalysis,
    CutoffOptions, CutoffReport, MomentPrediction, StationaryMoment, Verdict,
};
use crate::error::{Error, Result};
use crate::linalg::require_stable;
use crate::noise::{require_moment, NoiseSpec};
use crate::sde::{gaussian_covariance, ou_distance_decay, simulate_coupled, stationary_covariance, stationary_sample, SimOptions};
use crate::spectral::{NormalGrowthVerdict, SpectralDecomposition};
use crate::system::SystemSpec;
use crate::wasserstein::{empirical_moment, gaussian_w2, wasserstein};

pub const SCHEMA_VERSION: &str = "1";

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemView {
    pub dim: usize,
    pub drift: Vec<Vec<f64>>,
    pub loading: Vec<Vec<f64>>,
    pub initial_state: Vec<f64>,
    pub noise: NoiseSpec,
    pub order: f64,
}

impl From<&SystemSpec> for SystemView {
    fn from(s: &SystemSpec) -> Self {
        SystemView {
            dim: s.dim(),
            drift: rows(&s.drift),
            loading: rows(&s.loading),
            initial_state: vec_of(&s.initial_state),
            noise: s.noise.clone(),
            order: s.order,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationView {
    pub frequency: f64,
    pub hat: Vec<f64>,
    pub check: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionView {
    pub rate: f64,
    pub multiplicity: usize,
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub real_part: Option<Vec<f64>>,
    pub rotations: Vec<RotationView>,
    pub gap: Option<f64>,
    pub component_bound: f64,
}

impl From<&SpectralDecomposition> for DecompositionView {
    fn from(d: &SpectralDecomposition) -> Self {
        DecompositionView {
            rate: d.rate,
            multiplicity: d.multiplicity,
            eigenvalues: d.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            real_part: d.real_part.as_ref().map(vec_of),
            rotations: d
                .rotations
                .iter()
                .map(|r| RotationView { frequency: r.frequency, hat: vec_of(&r.hat), check: vec_of(&r.check) })
                .collect(),
            gap: d.gap,
            component_bound: d.component_bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeScale {
    pub epsilon: f64,
    pub cutoff_time: f64,
    /// Error bound at `r = 0`.
    pub error_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentCutoff {
    pub order: f64,
    /// Monte Carlo `E|𝒪_∞|^{p'}`.
    pub stationary_moment: f64,
    pub prediction: MomentPrediction,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: &'static str,
    pub seed: u64,
    pub system: SystemView,
    pub spectral_decomposition: DecompositionView,
    pub normal_growth: NormalGrowthVerdict,
    pub cutoff_report: CutoffReport,
    pub stationary_moment: StationaryMoment,
    pub time_scales: Vec<TimeScale>,
    pub moment_cutoff: Option<MomentCutoff>,
}

fn options(config: &RunConfig) -> CutoffOptions {
    CutoffOptions {
        window: config.window,
        horizon: config.horizon,
        tolerance: config.tolerance,
        stationary_samples: config.stationary_samples,
        sim: SimOptions::new(config.seed),
        ..CutoffOptions::default()
    }
}

/// Builds the system, then checks stability and the moment condition in
/// that order so the failure maps to the right exit code.
pub fn prepare(config: &RunConfig) -> Result<(SystemSpec, CutoffAnalysis)> {
    let sys = config.system()?;
    require_stable(&sys.drift)?;
    require_moment(&sys.noise, sys.order)?;
    if let Some(m) = config.moment_order {
        require_moment(&sys.noise, m)?;
    }
    let analysis = analyze_cutoff(&sys, &options(config))?;
    Ok((sys, analysis))
}

pub fn analyze(config: &RunConfig) -> Result<AnalyzeReport> {
    let (sys, a) = prepare(config)?;
    let time_scales = config
        .epsilons
        .iter()
        .map(|&eps| {
            Ok(TimeScale {
                epsilon: eps,
                cutoff_time: cutoff_time(a.report.rate, a.report.multiplicity, eps)?,
                error_bound: error_bound(&a.report, eps, 0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let moment_cutoff = match config.moment_order {
        Some(m) => {
            let s = stationary_sample(&sys, config.stationary_samples, &SimOptions::new(config.seed ^ 0x6d6f6d))?;
            let e = empirical_moment(&s, m);
            Some(MomentCutoff { order: m, stationary_moment: e, prediction: moment_cutoff_prediction(m, e, f64::INFINITY)? })
        }
        None => None,
    };
    Ok(AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        system: SystemView::from(&sys),
        spectral_decomposition: DecompositionView::from(&a.decomposition),
        normal_growth: a.normal_growth,
        cutoff_report: a.report,
        stationary_moment: a.moment,
        time_scales,
        moment_cutoff,
    })
}

/// Runs [`analyze`] and writes `report.json` into `out`.
pub fn cmd_analyze(config: &RunConfig, out: &Path) -> Result<PathBuf> {
    let report = analyze(config)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub epsilon: f64,
    pub r: f64,
    pub empirical_renormalized_wp: f64,
    /// `NaN` when the system has no explicit profile.
    pub predicted_profile: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub epsilon: f64,
    pub delta: f64,
    pub empirical_renormalized_wp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub profile: Vec<ProfileRow>,
    pub dichotomy: Vec<DichotomyRow>,
}

fn row_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// `𝒲_p(𝒪_t, 𝒪_∞)`: in closed form through `𝒲₂` for Gaussian noise and
/// `p ≤ 2`, by coupled simulation otherwise.
fn ou_distance(sys: &SystemSpec, t: f64, n: usize, opts: &SimOptions) -> Result<f64> {
    let p = sys.order;
    if let (Some(s), true) = (sys.gaussian_source(), p <= 2.0) {
        let d = sys.dim();
        let zero = DVector::zeros(d);
        let w2 = gaussian_w2(&zero, &gaussian_covariance(&sys.drift, &s, t)?, &zero, &stationary_covariance(&sys.drift, &s)?)?;
        return Ok(if p >= 1.0 { w2 } else { w2.powf(p) });
    }
    Ok(ou_distance_decay(sys, &[t], n, p, opts)?[0])
}

fn renormalized(sys: &SystemSpec, eps: f64, t: f64, n: usize, opts: &SimOptions) -> Result<f64> {
    let c = simulate_coupled(sys, eps, t, n, opts)?;
    Ok(wasserstein(&c.state, &c.stationary, sys.order)? / eps.powf(sys.order.min(1.0)))
}

pub fn curves(config: &RunConfig) -> Result<Curves> {
    let (sys, a) = prepare(config)?;
    let report = &a.report;
    let mut profile = Vec::new();
    let mut k = 0;
    for &eps in &config.epsilons {
        let te = cutoff_time(report.rate, report.multiplicity, eps)?;
        for &r in &config.r_grid {
            let t = te + r * report.window;
            if t < 0.0 {
                return Err(Error::Config(format!("t_ε + r·w = {t} is negative for ε = {eps}, r = {r}")));
            }
            let opts = SimOptions::new(row_seed(config.seed, k));
            k += 1;
            let empirical = renormalized(&sys, eps, t, config.samples, &opts)?;
            let ou = ou_distance(&sys, t, config.samples, &opts)?;
            let (lo, hi) = sandwich_bounds(&sys.drift, &sys.initial_state, t, eps, ou, sys.order, a.moment.monte_carlo)?;
            let predicted = if report.verdict == Verdict::ExplicitProfile { profile_value(report, r)? } else { f64::NAN };
            profile.push(ProfileRow {
                epsilon: eps,
                r,
                empirical_renormalized_wp: empirical,
                predicted_profile: predicted,
                sandwich_lo: lo,
                sandwich_hi: hi,
            });
        }
    }
    let mut dichotomy = Vec::new();
    for &eps in &config.epsilons {
        let te = cutoff_time(report.rate, report.multiplicity, eps)?;
        for &delta in &config.delta_grid {
            let opts = SimOptions::new(row_seed(config.seed, k));
            k += 1;
            dichotomy.push(DichotomyRow {
                epsilon: eps,
                delta,
                empirical_renormalized_wp: renormalized(&sys, eps, delta * te, config.samples, &opts)?,
            });
        }
    }
    Ok(Curves { profile, dichotomy })
}

pub const PLOT_SCRIPT: &str = r#"# Plots the curves written next to this file. Needs matplotlib.
import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(here, name), newline="") as f:
        return list(csv.DictReader(f))


def by_epsilon(rows):
    groups = {}
    for row in rows:
        groups.setdefault(row["epsilon"], []).append(row)
    return groups


fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))

for eps, rows in by_epsilon(read("curve_r.csv")).items():
    r = [float(x["r"]) for x in rows]
    left.plot(r, [float(x["empirical_renormalized_Wp"]) for x in rows], "o-", label=f"empirical, eps={eps}")
    left.fill_between(r, [float(x["sandwich_lo"]) for x in rows], [float(x["sandwich_hi"]) for x in rows], alpha=0.15)
    left.plot(r, [float(x["predicted_profile"]) for x in rows], "k--", lw=1)
left.set_xlabel("r")
left.set_ylabel("W_p / eps^min(1,p)")
left.set_yscale("log")
left.legend()

for eps, rows in by_epsilon(read("curve_delta.csv")).items():
    d = [float(x["delta"]) for x in rows]
    right.plot(d, [float(x["empirical_renormalized_Wp"]) for x in rows], "o-", label=f"eps={eps}")
right.set_xlabel("delta")
right.set_yscale("log")
right.legend()

fig.tight_layout()
fig.savefig(os.path.join(here, "curves.png"), dpi=150)
"#;

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut s = String::from("epsilon,r,empirical_renormalized_Wp,predicted_profile,sandwich_lo,sandwich_hi\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.epsilon, r.r, r.empirical_renormalized_wp, r.predicted_profile, r.sandwich_lo, r.sandwich_hi
        );
    }
    s
}

pub fn dichotomy_csv(rows: &[DichotomyRow]) -> String {
    let mut s = String::from("epsilon,delta,empirical_renormalized_Wp\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.epsilon, r.delta, r.empirical_renormalized_wp);
    }
    s
}

/// Runs [`curves`] and writes `curve_r.csv`, `curve_delta.csv` and
/// `plot_curves.py` into `out`.
pub fn cmd_curve(config: &RunConfig, out: &Path) -> Result<Curves> {
    let c = curves(config)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("curve_r.csv"), profile_csv(&c.profile))?;
    std::fs::write(out.join("curve_delta.csv"), dichotomy_csv(&c.dichotomy))?;
    std::fs::write(out.join("plot_curves.py"), PLOT_SCRIPT)?;
    Ok(c)
}
