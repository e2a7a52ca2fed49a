//! The same schedule in f64, f32 and emulated bfloat16, with and without the
//! safety factor.

use polar_express::linalg::spectral_norm;
use polar_express::{apply_schedule, exact_polar, gen_matrix, Precision, ScheduleBuilder, SpectrumSpec};

fn main() -> polar_express::Result<()> {
    let m = gen_matrix(&SpectrumSpec::log_spaced(1e-3, 1.0, 64, 64).with_seed(3))?;
    let q = exact_polar(&m)?;
    for safety in [1.0, 1.01] {
        let s = ScheduleBuilder::new(1e-3).steps(10).safety(safety).build()?;
        for p in [Precision::F64, Precision::F32, Precision::Bf16] {
            let x = apply_schedule(&m, &s, 10, p)?;
            let err = if x.is_finite() {
                format!("{:.3e}", spectral_norm(&q.sub(&x)?)?)
            } else {
                "non-finite".into()
            };
            println!("safety {safety:<5} {p:<5} error {err}");
        }
    }
    Ok(())
}
