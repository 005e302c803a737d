//! Five damped oscillators in a line with friction at both ends.
//!
//! Prints the spectrum, the leading rate and rotation, the spectral gap and
//! the normal-growth verdict for the first mass displaced.
//!
//! ```text
//! cargo run --example jacobi_chain
//! ```

use cutofflab::scenarios::build_jacobi_chain;
use cutofflab::spectral::{decompose_default, normal_growth, DEFAULT_GEOMETRY_TOL};
use nalgebra::DVector;

fn main() -> Result<(), cutofflab::Error> {
    let chain = build_jacobi_chain(5, 0.01, 1.0, 1.0, 1.0)?;
    let mut x = DVector::zeros(10);
    x[0] = 1.0;
    let dec = decompose_default(&chain.drift, &x)?;

    println!("eigenvalues:");
    for l in &dec.eigenvalues {
        println!("  {:+.7} {:+.7}i", l.re, l.im);
    }
    println!("rate 𝔮 = {:.7}, multiplicity ℓ = {}", dec.rate, dec.multiplicity);
    if let Some(gap) = dec.gap {
        println!("gap 𝔤 = {:.7}  (exponent 𝔤/𝔮 = {:.6})", gap, gap / dec.rate);
    }
    for r in &dec.rotations {
        let lead = dec.eigenvalues[0];
        println!("frequency θ = {:.6}, arg λ₁ = {:.6}", r.frequency, lead.im.atan2(lead.re));
        println!("|ŵ| = {:.7}, |w̌| = {:.7}, <ŵ,w̌> = {:.7}", r.hat.norm(), r.check.norm(), r.hat.dot(&r.check));
    }
    let verdict = normal_growth(&dec, DEFAULT_GEOMETRY_TOL);
    println!("{verdict:#?}");
    Ok(())
}
