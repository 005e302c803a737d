//! Renormalised distance to equilibrium around the cutoff time for a
//! damped rotation, against the explicit profile and the sandwich bounds.
//!
//! ```text
//! cargo run --release --example profile_convergence
//! ```

use cutofflab::cutoff::{analyze_cutoff, cutoff_time, profile_value, sandwich_bounds, CutoffOptions};
use cutofflab::scenarios::{build_conceptual, Conceptual};
use cutofflab::sde::{gaussian_covariance, simulate_coupled, stationary_covariance, SimOptions};
use cutofflab::wasserstein::{gaussian_w2, wasserstein};
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let rotation = build_conceptual(Conceptual::Rotation { lambda: 1.0, theta: 3.0 })?;
    let sys = rotation.brownian_system(DVector::from_vec(vec![1.0, 0.5]))?.with_order(2.0)?;
    let a = analyze_cutoff(&sys, &CutoffOptions::default())?;
    let rep = &a.report;
    let s = sys.gaussian_source().expect("Brownian driver");
    let zero = DVector::zeros(2);
    println!("{:>8} {:>5} {:>12} {:>12} {:>12} {:>12}", "ε", "r", "empirical", "profile", "lower", "upper");
    for eps in [1e-2, 1e-3, 1e-4] {
        let te = cutoff_time(rep.rate, rep.multiplicity, eps)?;
        for r in [-1.0, 0.0, 1.0, 2.0] {
            let t = te + r * rep.window;
            let c = simulate_coupled(&sys, eps, t, 2000, &SimOptions::new(1))?;
            let w = wasserstein(&c.state, &c.stationary, 2.0)? / eps;
            let ou = gaussian_w2(&zero, &gaussian_covariance(&sys.drift, &s, t)?, &zero, &stationary_covariance(&sys.drift, &s)?)?;
            let (lo, hi) = sandwich_bounds(&sys.drift, &sys.initial_state, t, eps, ou, 2.0, a.moment.monte_carlo)?;
            println!("{eps:>8.0e} {r:>5} {w:>12.6} {:>12.6} {lo:>12.6} {hi:>12.6}", profile_value(rep, r)?);
        }
    }
    Ok(())
}
