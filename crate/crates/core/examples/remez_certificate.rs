//! Solve one-step minimax problems and show the equioscillation certificate.

use polar_express::minimax::{max_error, optimal_cubic_error};
use polar_express::{optimal_cubic, remez_quintic, verify_equioscillation, OddPolynomial};

fn main() -> polar_express::Result<()> {
    for (l, u) in [(1e-3, 1.0), (0.1, 1.0), (0.5, 0.9), (0.999999, 1.0)] {
        let sol = remez_quintic(l, u)?;
        println!("[{l}, {u}]  quintic {:?}", sol.poly.coeffs());
        match verify_equioscillation(&sol.poly, l, u, 1e-10) {
            Ok(cert) if !sol.is_pade() => {
                println!("  error {:.3e} at {:?} after {} solves", cert.amplitude, cert.points, sol.iterations);
            }
            _ => println!("  narrow interval, Pade step; error {:.3e}", max_error(&sol.poly, l, u)),
        }
        let cubic = optimal_cubic(l, u)?;
        println!(
            "  cubic {:?} error {:.3e}; Newton-Schulz error {:.3e}",
            cubic.coeffs(),
            optimal_cubic_error(l, u)?,
            max_error(&OddPolynomial::newton_schulz_5().with_input_scale(u), l, u)
        );
    }
    Ok(())
}
