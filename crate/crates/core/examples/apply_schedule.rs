//! Orthogonalize a random matrix and watch the spectral error per step.

use polar_express::linalg::spectral_norm;
use polar_express::{apply_schedule, default_schedule, exact_polar, gen_matrix, Precision, SpectrumSpec};

fn main() -> polar_express::Result<()> {
    let m = gen_matrix(&SpectrumSpec::log_spaced(0.1, 10.0, 48, 24).with_seed(7))?;
    let q = exact_polar(&m)?;
    let s = default_schedule();
    for t in 1..=s.len() {
        let x = apply_schedule(&m, &s, t, Precision::F64)?;
        println!("T = {t}: ||polar(M) - X||_2 = {:.3e}", spectral_norm(&q.sub(&x)?)?);
    }
    Ok(())
}
