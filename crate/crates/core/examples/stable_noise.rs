//! An Ornstein–Uhlenbeck process driven by α-stable noise: the moment gate,
//! an abstract profile for p < 1 and the stationary moment estimate.
//!
//! ```text
//! cargo run --release --example stable_noise
//! ```

use cutofflab::cutoff::{analyze_cutoff, CutoffOptions};
use cutofflab::noise::NoiseSpec;
use cutofflab::system::SystemSpec;
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), cutofflab::Error> {
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 2.0]);
    let noise = NoiseSpec::AlphaStable { alpha: 1.2, scale: 1.0, dim: 2 };
    let sys = SystemSpec::new(q, DVector::from_vec(vec![1.0, 1.0]), noise)?;
    let opts = CutoffOptions { stationary_samples: 800, ..CutoffOptions::default() };

    match analyze_cutoff(&sys.clone().with_order(1.5)?, &opts) {
        Err(e) => println!("p = 1.5: {e}"),
        Ok(_) => println!("p = 1.5 unexpectedly accepted"),
    }
    for p in [0.5, 1.0] {
        let a = analyze_cutoff(&sys.clone().with_order(p)?, &opts)?;
        println!(
            "p = {p}: {:?}, E|𝒪∞|^{} ≈ {:.4} ± {:.4} (bound {:.3})",
            a.report.verdict,
            a.moment.order,
            a.moment.monte_carlo,
            a.moment.standard_error,
            a.moment.analytic_bound
        );
    }
    Ok(())
}
