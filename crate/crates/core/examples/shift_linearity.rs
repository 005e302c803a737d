//! Shifting a law by `u` moves it by exactly `|u|` in `𝒲_p` for `p ≥ 1`,
//! and by at most `|u|^p` for `p < 1`; linear contractions shrink distances.
//!
//! ```text
//! cargo run --release --example shift_linearity
//! ```

use cutofflab::noise::{standard_stable, stream_rng};
use cutofflab::wasserstein::{contraction_check, shift_linearity_check, EmpiricalMeasure};

fn main() -> Result<(), cutofflab::Error> {
    let mut rng = stream_rng(4, 0);
    let heavy: Vec<f64> = (0..50_000).map(|_| standard_stable(1.5, &mut rng)).collect();
    let sample = EmpiricalMeasure::from_scalars(&heavy)?;
    for p in [1.0, 1.4] {
        let c = shift_linearity_check(&sample, &[2.0], p, 9)?;
        println!("p = {p}: 𝒲 = {:.4} ± {:.4}, |u| = {}", c.estimate, c.standard_error, c.predicted);
    }
    let c = shift_linearity_check(&sample, &[2.0], 0.5, 9)?;
    println!("p = 0.5: 𝒲 = {:.4} in [{:.4}, {:.4}]", c.estimate, c.bracket.0, c.bracket.1);

    let (a, b) = sample.slice(0..500)?.halves()?;
    let k = contraction_check(&a, &b, |x| vec![0.3 * x[0]], 1.0)?;
    println!("contraction by 0.3: {:.4} ≤ {:.4}: {}", k.image, k.original, k.holds);
    Ok(())
}
