//! An outlying top singular value: one tailored cubic step first, then the
//! usual schedule.

use polar_express::linalg::spectral_norm;
use polar_express::{
    apply_schedule, exact_polar, gen_matrix, power_lower_bound, spectrum_aware_init, MatrixBuffer,
    Precision, ScheduleBuilder, SpectrumSpec,
};

fn steps_to(target: f64, q: &MatrixBuffer, f: impl Fn(usize) -> polar_express::Result<MatrixBuffer>) -> Option<usize> {
    (1..=40).find(|&t| f(t).is_ok_and(|x| spectral_norm(&q.sub(&x).unwrap()).unwrap() <= target))
}

fn main() -> polar_express::Result<()> {
    let m = gen_matrix(&SpectrumSpec::power_law(5.0, 32).with_seed(2))?;
    let m = m.scale(1.0 / m.frobenius_norm());
    let q = exact_polar(&m)?;
    let z = power_lower_bound(&m, 20, 1).z;
    println!("sigma_1 >= {z:.6}");
    let Some((p, x1)) = spectrum_aware_init(&m, z)? else {
        println!("z outside the admissible band; nothing to do");
        return Ok(());
    };
    println!("init cubic {:?}", p.coeffs());

    for l in [1e-3, 1e-8] {
        // the init step lifts the small singular values, so the tail starts from p(l)
        let plain = ScheduleBuilder::new(l).steps(40).build()?;
        let tail = ScheduleBuilder::new(p.eval(l).min(0.5)).steps(40).build()?;
        for target in [1e-1, 1e-2] {
            let a = steps_to(target, &q, |t| apply_schedule(&m, &plain, t, Precision::F64));
            let b = steps_to(target, &q, |t| {
                if t == 1 { Ok(x1.clone()) } else { apply_schedule(&x1, &tail, t - 1, Precision::F64) }
            });
            println!("l = {l:e}, error {target:e}: plain {a:?} steps, init + schedule {b:?} steps");
        }
    }
    Ok(())
}
