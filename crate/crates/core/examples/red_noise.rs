//! A system driven by red noise: the driver is itself a stationary
//! Ornstein–Uhlenbeck process.
//!
//! ```text
//! cargo run --release --example red_noise
//! ```

use cutofflab::noise::NoiseSpec;
use cutofflab::sde::{simulate_coupled, stationary_sample, SimOptions};
use cutofflab::system::SystemSpec;
use cutofflab::wasserstein::{empirical_moment, wasserstein};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), cutofflab::Error> {
    let noise = NoiseSpec::RedNoise {
        lambda: vec![vec![2.0]],
        inner: Box::new(NoiseSpec::brownian(&DMatrix::identity(1, 1))),
    };
    let sys = SystemSpec::new(DMatrix::from_element(1, 1, 1.0), DVector::from_vec(vec![1.0]), noise)?;
    let opts = SimOptions::new(2);
    let stat = stationary_sample(&sys, 2000, &opts)?;
    println!("stationary E|𝒪∞| ≈ {:.4}", empirical_moment(&stat, 1.0));
    let eps = 1e-2;
    for t in [2.0, 4.6, 7.0] {
        let c = simulate_coupled(&sys, eps, t, 1000, &opts)?;
        println!("t = {t}: 𝒲₁(X_t, μ^ε)/ε ≈ {:.4}, |e^(-t)x|/ε = {:.4}", wasserstein(&c.state, &c.stationary, 1.0)? / eps, (-t as f64).exp() / eps);
    }
    Ok(())
}
