//! Range of noise levels where the cutoff asymptotics are visible within a
//! time horizon `T` and tolerance `η`.
//!
//! ```text
//! cargo run --release --example epsilon_window
//! ```

use cutofflab::cutoff::{analyze_cutoff, CutoffOptions};
use cutofflab::scenarios::{build_conceptual, build_jacobi_chain, Conceptual};
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let chain = build_jacobi_chain(5, 0.01, 1.0, 1.0, 1.0)?;
    let mut x = DVector::zeros(10);
    x[0] = 1.0;
    let block = build_conceptual(Conceptual::JordanBlock { lambda: 1.0, dim: 3 })?;
    let systems = [
        ("jacobi chain", chain.brownian_system(x)?),
        ("jordan block", block.brownian_system(DVector::from_vec(vec![0.0, 0.0, 1.0]))?),
    ];
    for (name, sys) in systems {
        for horizon in [100.0, 1000.0, 10_000.0] {
            let opts = CutoffOptions { horizon, stationary_samples: 5000, ..CutoffOptions::default() };
            let w = analyze_cutoff(&sys, &opts)?.report.epsilon_interval;
            if w.empty {
                println!("{name}, T = {horizon}: empty (lo {:.3e}, hi {:.3e})", w.lo, w.hi);
            } else {
                println!("{name}, T = {horizon}: [{:.3e}, {:.3e}]", w.lo, w.hi);
            }
        }
    }
    Ok(())
}
