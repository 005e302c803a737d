//! Cutoff verdicts for the damped oscillator in its three regimes.
//!
//! ```text
//! cargo run --example analyze_oscillator
//! ```

use cutofflab::cutoff::{analyze_cutoff, CutoffOptions};
use cutofflab::scenarios::build_oscillator;
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let opts = CutoffOptions { stationary_samples: 20_000, ..CutoffOptions::default() };
    for (gamma, kappa) in [(3.0, 1.0), (2.0, 1.0), (1.0, 1.0)] {
        let (osc, regime) = build_oscillator(gamma, kappa)?;
        let sys = osc.brownian_system(DVector::from_vec(vec![1.0, 0.0]))?;
        let a = analyze_cutoff(&sys, &opts)?;
        let r = &a.report;
        println!("γ = {gamma}, κ = {kappa}: {regime:?}");
        println!("  verdict {:?}, 𝔮 = {:.6}, ℓ = {}", r.verdict, r.rate, r.multiplicity);
        println!("  C₀ = {:.4}, E|𝒪∞| ≈ {:.4} ± {:.4}", a.growth.c0, a.moment.monte_carlo, a.moment.standard_error);
        let w = r.epsilon_interval;
        if w.empty {
            println!("  no observable ε for T = {}, η = {}", w.horizon, w.tolerance);
        } else {
            println!("  observable for ε in [{:.3e}, {:.3e}]", w.lo, w.hi);
        }
    }
    Ok(())
}
