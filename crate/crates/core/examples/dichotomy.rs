//! Before and after the cutoff time: the renormalised distance at `δt_ε`
//! blows up for δ < 1 and vanishes for δ > 1 as ε shrinks.
//!
//! ```text
//! cargo run --release --example dichotomy
//! ```

use cutofflab::cutoff::{cutoff_time, dichotomy_prediction};
use cutofflab::scenarios::build_oscillator;
use cutofflab::sde::{simulate_coupled, SimOptions};
use cutofflab::spectral::decompose_default;
use cutofflab::wasserstein::wasserstein;
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let (osc, _) = build_oscillator(1.0, 1.0)?;
    let sys = osc.brownian_system(DVector::from_vec(vec![1.0, -1.0]))?;
    let dec = decompose_default(&sys.drift, &sys.initial_state)?;
    for delta in [0.5, 0.8, 1.25, 2.0] {
        print!("δ = {delta:<5} {:?}:", dichotomy_prediction(dec.rate, dec.multiplicity, delta)?);
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let t = delta * cutoff_time(dec.rate, dec.multiplicity, eps)?;
            let c = simulate_coupled(&sys, eps, t, 1000, &SimOptions::new(3))?;
            print!("  {:.3e}", wasserstein(&c.state, &c.stationary, 1.0)? / eps);
        }
        println!();
    }
    Ok(())
}
