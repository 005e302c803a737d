use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square};
use crate::noise::{matrix_from_rows, NoiseSpec};

/// `dX = −QX dt + ε σ dL`, `X₀ = x`, observed in Wasserstein order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub drift: DMatrix<f64>,
    pub initial_state: DVector<f64>,
    pub noise: NoiseSpec,
    /// `σ`, a `d × k` matrix mapping the `k`-dimensional driver into state space.
    pub loading: DMatrix<f64>,
    pub order: f64,
}

impl SystemSpec {
    /// Identity loading, order `p = 1`.
    pub fn new(drift: DMatrix<f64>, initial_state: DVector<f64>, noise: NoiseSpec) -> Result<Self> {
        let d = drift.nrows();
        let s = SystemSpec { drift, initial_state, noise, loading: DMatrix::identity(d, d), order: 1.0 };
        s.validate()?;
        Ok(s)
    }

    /// Explicit loading `σ`, order `p = 1`.
    pub fn with_parts(drift: DMatrix<f64>, loading: DMatrix<f64>, initial_state: DVector<f64>, noise: NoiseSpec) -> Result<Self> {
        let s = SystemSpec { drift, initial_state, noise, loading, order: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_loading(mut self, loading: DMatrix<f64>) -> Result<Self> {
        self.loading = loading;
        self.validate()?;
        Ok(self)
    }

    pub fn with_order(mut self, p: f64) -> Result<Self> {
        self.order = p;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        check_square(&self.drift)?;
        check_finite(&self.drift)?;
        let d = self.drift.nrows();
        if self.initial_state.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.initial_state.len() });
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.noise.validate()?;
        if self.loading.nrows() != d || self.loading.ncols() != self.noise.dim() {
            return Err(Error::DimensionMismatch { expected: d * self.noise.dim(), found: self.loading.len() });
        }
        if !(self.order > 0.0 && self.order.is_finite()) {
            return Err(Error::DomainError(format!("order p must be positive, got {}", self.order)));
        }
        Ok(())
    }

    /// `σΣσᵀ` when the driver is Brownian.
    pub fn gaussian_source(&self) -> Option<DMatrix<f64>> {
        match &self.noise {
            NoiseSpec::Brownian { covariance } => {
                let s = matrix_from_rows(covariance).ok()?;
                Some(&self.loading * s * self.loading.transpose())
            }
            _ => None,
        }
    }
}
