use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::noise::{matrix_from_rows, NoiseSpec};
use crate::scenarios::{build_conceptual, build_gradient, build_jacobi_chain, build_oscillator, Conceptual, Scenario};
use crate::system::SystemSpec;

pub const DEFAULT_OUT: &str = "cutofflab-out";

fn one() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    3.0
}
fn default_chain_damping() -> f64 {
    0.01
}
fn default_masses() -> usize {
    5
}
fn default_block() -> usize {
    2
}
fn default_epsilons() -> Vec<f64> {
    vec![1e-2, 1e-3]
}
fn default_r_grid() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0, 2.0]
}
fn default_delta_grid() -> Vec<f64> {
    vec![0.5, 2.0]
}
fn default_samples() -> usize {
    2000
}
fn default_stationary_samples() -> usize {
    100_000
}
fn default_horizon() -> f64 {
    1000.0
}
fn default_tolerance() -> f64 {
    0.1
}

/// A named model system and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScenarioConfig {
    #[serde(alias = "rotation51")]
    Rotation {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "default_theta")]
        theta: f64,
    },
    Oscillator {
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "one")]
        kappa: f64,
    },
    JacobiChain {
        #[serde(default = "default_masses")]
        n: usize,
        #[serde(default = "default_chain_damping")]
        gamma: f64,
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default = "one")]
        friction_first: f64,
        #[serde(default = "one")]
        friction_last: f64,
    },
    Suspension {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "one")]
        kappa: f64,
    },
    JordanBlock {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "default_block")]
        dim: usize,
    },
    Gradient {
        eigenvalues: Vec<f64>,
        #[serde(default)]
        basis: Option<Vec<Vec<f64>>>,
    },
}

/// Scenario parameters given on the command line; unset fields take the
/// scenario defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioFlags {
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub masses: Option<usize>,
    pub dim: Option<usize>,
    pub eigenvalues: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn from_flags(name: &str, f: &ScenarioFlags) -> Result<Self> {
        Ok(match name {
            "rotation" | "rotation51" => ScenarioConfig::Rotation {
                lambda: f.lambda.unwrap_or(1.0),
                theta: f.theta.unwrap_or(3.0),
            },
            "oscillator" => ScenarioConfig::Oscillator { gamma: f.gamma.unwrap_or(1.0), kappa: f.kappa.unwrap_or(1.0) },
            "jacobi_chain" | "jacobi-chain" => ScenarioConfig::JacobiChain {
                n: f.masses.unwrap_or(5),
                gamma: f.gamma.unwrap_or(0.01),
                kappa: f.kappa.unwrap_or(1.0),
                friction_first: 1.0,
                friction_last: 1.0,
            },
            "suspension" => ScenarioConfig::Suspension {
                lambda: f.lambda.unwrap_or(1.0),
                gamma: f.gamma.unwrap_or(1.0),
                kappa: f.kappa.unwrap_or(1.0),
            },
            "jordan_block" | "jordan-block" => {
                ScenarioConfig::JordanBlock { lambda: f.lambda.unwrap_or(1.0), dim: f.dim.unwrap_or(2) }
            }
            "gradient" => ScenarioConfig::Gradient {
                eigenvalues: f
                    .eigenvalues
                    .clone()
                    .ok_or_else(|| Error::Config("gradient scenario needs --eigenvalues".into()))?,
                basis: None,
            },
            other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioConfig::Rotation { lambda, theta } => {
                build_conceptual(Conceptual::Rotation { lambda: *lambda, theta: *theta })
            }
            ScenarioConfig::Oscillator { gamma, kappa } => Ok(build_oscillator(*gamma, *kappa)?.0),
            ScenarioConfig::JacobiChain { n, gamma, kappa, friction_first, friction_last } => {
                build_jacobi_chain(*n, *gamma, *kappa, *friction_first, *friction_last)
            }
            ScenarioConfig::Suspension { lambda, gamma, kappa } => {
                build_conceptual(Conceptual::Suspension { lambda: *lambda, gamma: *gamma, kappa: *kappa })
            }
            ScenarioConfig::JordanBlock { lambda, dim } => {
                build_conceptual(Conceptual::JordanBlock { lambda: *lambda, dim: *dim })
            }
            ScenarioConfig::Gradient { eigenvalues, basis } => {
                let d = eigenvalues.len();
                let b = match basis {
                    Some(rows) => matrix_from_rows(rows)?,
                    None => DMatrix::identity(d, d),
                };
                build_gradient(eigenvalues, &b)
            }
        }
    }
}

/// One run: the system, the grids and the sampling settings.
///
/// Exactly one of `drift` and `scenario` must be present. Matrices are
/// row-major arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    /// `σ`; defaults to the scenario's loading or the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<Vec<Vec<f64>>>,
    /// Defaults to the first unit vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    /// Defaults to a standard Brownian motion of the loading's width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    /// Wasserstein order `p`.
    #[serde(default = "one")]
    pub order: f64,
    /// Moment order `p'` for the moment cutoff; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_order: Option<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "one")]
    pub window: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_stationary_samples")]
    pub stationary_samples: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.drift, &self.scenario) {
            (Some(_), Some(_)) => return bad("give either drift or scenario, not both".into()),
            (None, None) => return bad("a drift matrix or a scenario is required".into()),
            _ => {}
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("noise levels must lie in (0, 1), got {e}"));
        }
        if self.samples < 100 {
            return bad(format!("at least 100 samples are needed, got {}", self.samples));
        }
        if self.stationary_samples < 2 {
            return bad("at least 2 stationary samples are needed".into());
        }
        if self.r_grid.iter().chain(&self.delta_grid).any(|v| !v.is_finite()) {
            return bad("grids must be finite".into());
        }
        if let Some(d) = self.delta_grid.iter().find(|d| **d <= 0.0) {
            return bad(format!("δ must be positive, got {d}"));
        }
        for (name, v) in [("order", self.order), ("window", self.window), ("horizon", self.horizon), ("tolerance", self.tolerance)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(m) = self.moment_order {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("moment order must be positive, got {m}"));
            }
        }
        Ok(())
    }

    /// Replaces the system by a named scenario.
    pub fn with_scenario(mut self, scenario: ScenarioConfig) -> Self {
        self.drift = None;
        self.loading = None;
        self.scenario = Some(scenario);
        self
    }

    pub fn system(&self) -> Result<SystemSpec> {
        self.validate()?;
        let (drift, scenario_loading) = match (&self.drift, &self.scenario) {
            (Some(rows), _) => (matrix_from_rows(rows)?, None),
            (_, Some(s)) => {
                let built = s.build()?;
                (built.drift, Some(built.loading))
            }
            _ => unreachable!("checked by validate"),
        };
        let d = drift.nrows();
        let loading = match &self.loading {
            Some(rows) => matrix_from_rows(rows)?,
            None => scenario_loading.unwrap_or_else(|| DMatrix::identity(d, d)),
        };
        let k = loading.ncols();
        let noise = self.noise.clone().unwrap_or_else(|| NoiseSpec::brownian(&DMatrix::identity(k, k)));
        let x = match &self.initial_state {
            Some(v) => DVector::from_column_slice(v),
            None => {
                let mut e = DVector::zeros(d);
                if d > 0 {
                    e[0] = 1.0;
                }
                e
            }
        };
        SystemSpec::with_parts(drift, loading, x, noise)?.with_order(self.order)
    }
}
