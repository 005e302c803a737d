//! Cutoff thermalization of linear systems `dX = −QX dt + ε dL` driven by
//! small Lévy noise.
//!
//! The library decides whether the distance to equilibrium, renormalised by
//! ε, converges to an explicit profile around the cutoff time
//! `t_ε = |ln ε|/𝔮 + ((ℓ−1)/𝔮) ln|ln ε|` or only shows window cutoff, and
//! measures it by simulation and exact empirical Wasserstein distances.
//! [`spectral`] holds the decomposition and the normal-growth test,
//! [`cutoff`] the quantitative statements, [`sde`] and [`wasserstein`] the
//! Monte Carlo side and [`entropy`] the Gaussian relative-entropy variant.

pub mod cli;
pub mod cutoff;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod scenarios;
pub mod sde;
pub mod spectral;
pub mod system;
pub mod wasserstein;

pub use error::{Error, Result};
