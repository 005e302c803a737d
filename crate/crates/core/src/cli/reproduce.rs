use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use crate::cutoff::{classify, Verdict};
use crate::entropy::entropy_dichotomy;
use crate::error::{Error, Result};
use crate::scenarios::{build_jacobi_chain, build_oscillator, OscillatorRegime};
use crate::spectral::{decompose_default, normal_growth, DEFAULT_GEOMETRY_TOL};

/// The printed spectrum of the five-mass chain (`γ = 0.01`, `κ = ς = 1`).
pub const JACOBI_EIGENVALUES: [(f64, f64); 10] = [
    (0.0263377, 1.88656),
    (0.0263377, -1.88656),
    (0.104782, 1.55549),
    (0.104782, -1.55549),
    (0.234099, 1.06262),
    (0.234099, -1.06262),
    (0.395218, 0.517319),
    (0.395218, -0.517319),
    (0.452655, 0.0),
    (0.0264706, 0.0),
];
pub const JACOBI_RATE: f64 = 0.0263377;
pub const JACOBI_ANGLE: f64 = 1.55684;
pub const JACOBI_HAT_NORM: f64 = 0.181073;
pub const JACOBI_CHECK_NORM: f64 = 0.140425;
pub const JACOBI_INNER: f64 = -0.0130705;
pub const JACOBI_GAP: f64 = 0.0001329;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReproduceTarget {
    JacobiChain,
    Oscillator,
    EntropyDichotomy,
}

impl FromStr for ReproduceTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi-chain" => Ok(ReproduceTarget::JacobiChain),
            "oscillator" => Ok(ReproduceTarget::Oscillator),
            "entropy-dichotomy" => Ok(ReproduceTarget::EntropyDichotomy),
            other => Err(Error::Config(format!(
                "unknown target '{other}' (expected jacobi-chain, oscillator or entropy-dichotomy)"
            ))),
        }
    }
}

impl fmt::Display for ReproduceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReproduceTarget::JacobiChain => "jacobi-chain",
            ReproduceTarget::Oscillator => "oscillator",
            ReproduceTarget::EntropyDichotomy => "entropy-dichotomy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: String,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn close(name: &str, observed: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            observed: format!("{observed}"),
            expected: format!("{expected} ± {tol}"),
            pass: (observed - expected).abs() <= tol,
        }
    }

    fn equal<T: fmt::Debug + PartialEq>(name: &str, observed: T, expected: T) -> Self {
        Check {
            name: name.into(),
            observed: format!("{observed:?}"),
            expected: format!("{expected:?}"),
            pass: observed == expected,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: observed {}, expected {}", self.name, self.observed, self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reproduction {
    pub target: ReproduceTarget,
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Largest distance from a reference eigenvalue to the nearest computed one.
pub fn eigenvalue_mismatch(computed: &[Complex64], reference: &[(f64, f64)]) -> f64 {
    reference
        .iter()
        .map(|&(re, im)| {
            let z = Complex64::new(re, im);
            computed.iter().map(|c| (c - z).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn jacobi_chain() -> Result<Vec<Check>> {
    let chain = build_jacobi_chain(5, 0.01, 1.0, 1.0, 1.0)?;
    let mut x = DVector::zeros(10);
    x[0] = 1.0;
    let dec = decompose_default(&chain.drift, &x)?;
    let lead = dec
        .eigenvalues
        .iter()
        .filter(|z| z.im > 0.0)
        .min_by(|a, b| a.re.total_cmp(&b.re))
        .copied()
        .ok_or(Error::RealSpectrum)?;
    let mut checks = vec![
        Check::close("eigenvalues (max deviation)", eigenvalue_mismatch(&dec.eigenvalues, &JACOBI_EIGENVALUES), 0.0, 1e-4),
        Check::close("rate", dec.rate, JACOBI_RATE, 1e-6),
        Check::close("arg of leading eigenvalue", lead.im.atan2(lead.re), JACOBI_ANGLE, 1e-5),
    ];
    match dec.rotations.first() {
        Some(rot) => {
            checks.push(Check::close("|w_hat|", rot.hat.norm(), JACOBI_HAT_NORM, 1e-4));
            checks.push(Check::close("|w_check|", rot.check.norm(), JACOBI_CHECK_NORM, 1e-4));
            checks.push(Check::close("<w_hat, w_check>", rot.hat.dot(&rot.check), JACOBI_INNER, 1e-4));
        }
        None => checks.push(Check::equal("leading rotation present", false, true)),
    }
    checks.push(Check::close("gap", dec.gap.unwrap_or(f64::NAN), JACOBI_GAP, 1e-6));
    checks.push(Check::equal("profile exists", normal_growth(&dec, DEFAULT_GEOMETRY_TOL).profile_exists, false));
    Ok(checks)
}

fn oscillator() -> Result<Vec<Check>> {
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let cases = [
        (3.0, 1.0, OscillatorRegime::Overdamped, Verdict::ExplicitProfile, 1),
        (2.0, 1.0, OscillatorRegime::Critical, Verdict::ExplicitProfile, 2),
        (1.0, 1.0, OscillatorRegime::Subcritical, Verdict::WindowOnly, 1),
    ];
    let mut checks = Vec::new();
    for (gamma, kappa, regime, verdict, ell) in cases {
        let (s, got) = build_oscillator(gamma, kappa)?;
        let dec = decompose_default(&s.drift, &x)?;
        let v = classify(1.0, &dec, &normal_growth(&dec, DEFAULT_GEOMETRY_TOL));
        let label = format!("γ={gamma} κ={kappa}");
        checks.push(Check::equal(&format!("{label} regime"), got, regime));
        checks.push(Check::equal(&format!("{label} verdict"), v, verdict));
        checks.push(Check::equal(&format!("{label} multiplicity"), dec.multiplicity, ell));
    }
    Ok(checks)
}

fn entropy() -> Result<Vec<Check>> {
    let q = DMatrix::<f64>::identity(1, 1);
    let x = DVector::from_element(1, 1.0);
    let grid = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut checks = Vec::new();
    for delta in [0.5, 2.0] {
        let out = entropy_dichotomy(&q, &q, &x, delta, &grid)?;
        let want = 2.0 * (delta - 1.0);
        checks.push(Check::equal(&format!("δ={delta} slope sign"), out.slope.signum(), want.signum()));
        checks.push(Check::close(&format!("δ={delta} slope"), out.slope, want, 0.05));
    }
    Ok(checks)
}

pub fn reproduce(target: ReproduceTarget) -> Result<Reproduction> {
    let checks = match target {
        ReproduceTarget::JacobiChain => jacobi_chain()?,
        ReproduceTarget::Oscillator => oscillator()?,
        ReproduceTarget::EntropyDichotomy => entropy()?,
    };
    Ok(Reproduction { target, checks })
}
