//! Relative entropy of the Gaussian marginal with respect to equilibrium:
//! the ε-dichotomy slope and the entropy profile.
//!
//! ```text
//! cargo run --example entropy_cutoff
//! ```

use cutofflab::entropy::{entropy_dichotomy, entropy_profile};
use cutofflab::scenarios::build_oscillator;
use cutofflab::sde::stationary_covariance;
use cutofflab::spectral::decompose_default;
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let (osc, _) = build_oscillator(3.0, 1.0)?;
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let grid: Vec<f64> = (2..=8).map(|k| 10f64.powi(-k)).collect();
    for delta in [0.5, 2.0] {
        let d = entropy_dichotomy(&osc.drift, &osc.loading, &x, delta, &grid)?;
        println!("δ = {delta}: slope of ln H against ln ε = {:.4} (mean term alone gives {})", d.slope, 2.0 * (delta - 1.0));
    }
    let dec = decompose_default(&osc.drift, &x)?;
    let s = &osc.loading * osc.loading.transpose();
    let inf = stationary_covariance(&osc.drift, &s)?;
    for r in [-1.0, 0.0, 1.0] {
        println!("profile at r = {r}: {:.6}", entropy_profile(&dec, &inf, 1.0, r)?);
    }
    Ok(())
}
