//! Builders for the model systems: damped oscillator, gradient systems,
//! chains of coupled oscillators and small conceptual examples.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::system::SystemSpec;

/// A drift matrix together with the way a driver enters the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub drift: DMatrix<f64>,
    pub loading: DMatrix<f64>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// Full system with the given initial state and driver.
    pub fn system(&self, initial_state: DVector<f64>, noise: NoiseSpec) -> Result<SystemSpec> {
        SystemSpec::with_parts(self.drift.clone(), self.loading.clone(), initial_state, noise)
    }

    /// Full system driven by a standard Brownian motion of the loading's width.
    pub fn brownian_system(&self, initial_state: DVector<f64>) -> Result<SystemSpec> {
        let k = self.loading.ncols();
        self.system(initial_state, NoiseSpec::brownian(&DMatrix::identity(k, k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillatorRegime {
    Overdamped,
    Critical,
    Subcritical,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} must be positive, got {v}")))
    }
}

/// Damped linear oscillator `ẍ + γẋ + κx = ε L̇` in position–velocity
/// coordinates, `Q = [[0, −1], [κ, γ]]`; noise acts on the velocity.
/// The regime follows the sign of `γ² − 4κ`.
pub fn build_oscillator(gamma: f64, kappa: f64) -> Result<(Scenario, OscillatorRegime)> {
    positive("damping", gamma)?;
    positive("stiffness", kappa)?;
    let drift = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, kappa, gamma]);
    let disc = gamma * gamma - 4.0 * kappa;
    let regime = if disc > 0.0 {
        OscillatorRegime::Overdamped
    } else if disc == 0.0 {
        OscillatorRegime::Critical
    } else {
        OscillatorRegime::Subcritical
    };
    let loading = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    Ok((Scenario { name: "oscillator".into(), drift, loading }, regime))
}

/// Symmetric drift `Q = B diag(λ) Bᵀ` for an orthogonal `B` and positive `λ`.
pub fn build_gradient(eigenvalues: &[f64], basis: &DMatrix<f64>) -> Result<Scenario> {
    let d = eigenvalues.len();
    if basis.nrows() != d || basis.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: basis.nrows() });
    }
    for &l in eigenvalues {
        positive("gradient eigenvalue", l)?;
    }
    if (basis.transpose() * basis - DMatrix::<f64>::identity(d, d)).norm() > 1e-10 {
        return Err(Error::DomainError("gradient basis must be orthogonal".into()));
    }
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
    let drift = basis * diag * basis.transpose();
    Ok(Scenario { name: "gradient".into(), drift, loading: DMatrix::identity(d, d) })
}

/// `n` unit masses in a line, neighbours coupled with stiffness `κ`, the
/// ends pinned with stiffness `κ`, uniform damping `γ`, and extra friction
/// `ς₁`, `ς_n` at the two ends. State is (velocities, positions); noise
/// enters the velocities of the two end masses.
pub fn build_jacobi_chain(n: usize, gamma: f64, kappa: f64, friction_first: f64, friction_last: f64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::DomainError(format!("a chain needs at least two oscillators, got {n}")));
    }
    positive("stiffness", kappa)?;
    if !(gamma >= 0.0 && friction_first >= 0.0 && friction_last >= 0.0) {
        return Err(Error::DomainError("damping and friction must be non-negative".into()));
    }
    let mut q = DMatrix::<f64>::zeros(2 * n, 2 * n);
    q[(0, 0)] = friction_first;
    q[(n - 1, n - 1)] = friction_last;
    for i in 0..n {
        let end = i == 0 || i == n - 1;
        q[(i, n + i)] = if end { kappa + gamma } else { 2.0 * kappa + gamma };
        if i + 1 < n {
            q[(i, n + i + 1)] = -kappa;
            q[(i + 1, n + i)] = -kappa;
        }
        q[(n + i, i)] = -1.0;
    }
    let mut loading = DMatrix::<f64>::zeros(2 * n, 2);
    loading[(0, 0)] = 1.0;
    loading[(n - 1, 1)] = 1.0;
    Ok(Scenario { name: "jacobi_chain".into(), drift: q, loading })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conceptual {
    /// `Q = [[λ, θ], [−θ, λ]]`: a pure rotation at rate `λ`.
    Rotation { lambda: f64, theta: f64 },
    /// `Q = diag(λ, Q₁)` with `Q₁` the oscillator `(γ, κ)`.
    Suspension { lambda: f64, gamma: f64, kappa: f64 },
    /// `Q = λI + N` with `N` the `dim × dim` upper shift.
    JordanBlock { lambda: f64, dim: usize },
}

pub fn build_conceptual(kind: Conceptual) -> Result<Scenario> {
    match kind {
        Conceptual::Rotation { lambda, theta } => {
            positive("rate", lambda)?;
            if !theta.is_finite() {
                return Err(Error::NonFinite);
            }
            let drift = DMatrix::from_row_slice(2, 2, &[lambda, theta, -theta, lambda]);
            Ok(Scenario { name: "rotation".into(), drift, loading: DMatrix::identity(2, 2) })
        }
        Conceptual::Suspension { lambda, gamma, kappa } => {
            positive("rate", lambda)?;
            let (osc, _) = build_oscillator(gamma, kappa)?;
            let mut drift = DMatrix::<f64>::zeros(3, 3);
            drift[(0, 0)] = lambda;
            drift.view_mut((1, 1), (2, 2)).copy_from(&osc.drift);
            Ok(Scenario { name: "suspension".into(), drift, loading: DMatrix::identity(3, 3) })
        }
        Conceptual::JordanBlock { lambda, dim } => {
            positive("rate", lambda)?;
            if dim == 0 {
                return Err(Error::DomainError("Jordan block needs dim ≥ 1".into()));
            }
            let mut drift = DMatrix::<f64>::identity(dim, dim) * lambda;
            for i in 0..dim - 1 {
                drift[(i, i + 1)] = 1.0;
            }
            Ok(Scenario { name: "jordan_block".into(), drift, loading: DMatrix::identity(dim, dim) })
        }
    }
}
