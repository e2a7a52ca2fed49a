//! Two rectangular products for a whole schedule on a tall matrix, against
//! the step-by-step path.

use polar_express::accel::{fast_cost, naive_cost};
use polar_express::engine::compose;
use polar_express::linalg::spectral_norm;
use polar_express::matrix::count_muladds;
use polar_express::{
    default_schedule, fast_apply, gen_matrix, normalize, should_use_fast, FastApplyConfig, Precision,
    SpectrumSpec,
};

fn main() -> polar_express::Result<()> {
    let (n, alpha) = (16, 8);
    let polys = default_schedule().polys()[..6].to_vec();
    let m = gen_matrix(&SpectrumSpec::log_spaced(1e-2, 1.0, alpha * n, n).with_seed(1))?;
    let x = normalize(&m, 1e-3)?;

    let (naive, naive_ops) = count_muladds(|| compose(&x, &polys, 6));
    let (fast, fast_ops) = count_muladds(|| fast_apply(&x, &polys, &FastApplyConfig::exact()));
    let (naive, fast) = (naive?, fast?);
    let n3 = (n * n * n) as f64;
    println!("multiply-adds / n^3: naive {:.1} (model {:.1}), fast {:.1} (model {:.1})",
        naive_ops as f64 / n3, naive_cost(5, 6, alpha as f64),
        fast_ops as f64 / n3, fast_cost(5, 6, alpha as f64));
    println!("difference {:.2e}", spectral_norm(&naive.sub(&fast)?)?);
    println!("fast pays off at aspect {alpha}: {}", should_use_fast(alpha as f64, 6));

    // low precision with restarts and first-pass regularization
    let xb = x.to_precision(Precision::Bf16);
    for k in [1, 2, 3, 6] {
        let cfg = FastApplyConfig::default().restart_every(k);
        match fast_apply(&xb, &polys, &cfg) {
            Ok(out) => println!("bf16 restart {k}: error vs f64 {:.3e}", spectral_norm(&out.sub(&naive)?)?),
            Err(e) => println!("bf16 restart {k}: {e}"),
        }
    }
    Ok(())
}
