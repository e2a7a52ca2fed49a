use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polar_express::minimax::{max_error, optimal_cubic_error, remez_quintic_with, RemezOptions};
use polar_express::{optimal_cubic, remez_quintic, verify_equioscillation, OddPolynomial};

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-4.0f64..-0.0005, -2.0f64..0.0).prop_map(|(log_ratio, log_u)| {
        let u = 10f64.powf(log_u);
        (u * 10f64.powf(log_ratio), u)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quintic_certifies((l, u) in interval()) {
        let sol = remez_quintic(l, u).unwrap();
        prop_assume!(!sol.is_pade());
        let cert = verify_equioscillation(&sol.poly, l, u, 1e-10).unwrap();
        prop_assert_eq!(cert.points.len(), 4);
        prop_assert!((max_error(&sol.poly, l, u) - cert.amplitude).abs() <= 1e-10);
    }

    #[test]
    fn cubic_levels_are_equal((l, u) in interval()) {
        let p = optimal_cubic(l, u).unwrap();
        let crit = p.positive_critical_points()[0];
        prop_assert!(crit > l && crit < u);
        let (el, eu, ec) = (1.0 - p.eval(l), 1.0 - p.eval(u), 1.0 - p.eval(crit));
        prop_assert!((el - eu).abs() <= 1e-12);
        prop_assert!((el + ec).abs() <= 1e-12);
        prop_assert!((el - optimal_cubic_error(l, u).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn scale_covariance((l, u) in interval()) {
        let unit = remez_quintic(l / u, 1.0).unwrap().poly;
        let scaled = remez_quintic(l, u).unwrap().poly;
        let [a, b, c] = [unit.coeffs()[0], unit.coeffs()[1], unit.coeffs()[2]];
        let want = [a / u, b / u.powi(3), c / u.powi(5)];
        for (got, want) in scaled.coeffs().iter().zip(want) {
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn quintic_beats_cubic_and_newton_schulz((l, u) in interval()) {
        let e5 = max_error(&remez_quintic(l, u).unwrap().poly, l, u);
        let e3 = optimal_cubic_error(l, u).unwrap();
        prop_assert!(e5 <= e3 + 1e-14);
        let ns = OddPolynomial::newton_schulz_5().with_input_scale(u);
        prop_assert!(e5 <= max_error(&ns, l, u) + 1e-14);
    }
}

/// Brute-force search over a 81^3 coefficient grid (+-10% around the answer)
/// never finds a quintic with smaller maximum error.
#[test]
fn brute_force_cannot_beat_remez() {
    for (l, u) in [(1e-3, 1.0), (0.05, 0.8), (0.3, 1.0), (0.02, 0.1)] {
        let sol = remez_quintic(l, u).unwrap();
        let e = verify_equioscillation(&sol.poly, l, u, 1e-10).unwrap().amplitude;
        let c = sol.poly.coeffs().to_vec();
        let steps: Vec<f64> = (0..81).map(|i| -0.1 + 0.2 * i as f64 / 80.0).collect();
        let mut best = f64::INFINITY;
        for &da in &steps {
            for &db in &steps {
                for &dc in &steps {
                    let q = OddPolynomial::quintic(c[0] * (1.0 + da), c[1] * (1.0 + db), c[2] * (1.0 + dc));
                    best = best.min(max_error(&q, l, u));
                }
            }
        }
        assert!(e <= best + 1e-9, "[{l}, {u}]: remez {e} vs brute force {best}");
    }
}

#[test]
fn remez_iteration_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts: Vec<usize> = (0..1000)
        .map(|_| {
            let ratio = 10f64.powf(rng.random_range(-4.0..=0.999f64.log10()));
            remez_quintic(ratio, 1.0).unwrap().iterations
        })
        .collect();
    counts.sort_unstable();
    assert!(*counts.last().unwrap() <= 20, "max {}", counts.last().unwrap());
    assert!(counts[counts.len() / 2] <= 5, "median {}", counts[counts.len() / 2]);
}

#[test]
fn pade_threshold_is_a_parameter() {
    let (l, u) = (0.9999, 1.0);
    assert!(!remez_quintic(l, u).unwrap().is_pade());
    let lowered = RemezOptions {
        pade_threshold: 0.999,
        ..Default::default()
    };
    let sol = remez_quintic_with(l, u, &lowered).unwrap();
    assert!(sol.is_pade());
    assert!(sol.certificate.is_none());
    // the exchange itself is singular this close to l = u; it must fail loudly
    let never = RemezOptions {
        pade_threshold: 2.0,
        ..Default::default()
    };
    match remez_quintic_with(0.999_999_9, 1.0, &never) {
        Ok(sol) => assert!(max_error(&sol.poly, 0.999_999_9, 1.0) < 1e-12),
        Err(e) => assert!(e.is_numeric(), "{e}"),
    }
}

#[test]
fn degenerate_interval_gives_pade() {
    let sol = remez_quintic(1.0, 1.0).unwrap();
    assert_eq!(sol.poly.coeffs(), &[1.875, -1.25, 0.375]);
    let sol = remez_quintic(0.5, 0.5).unwrap();
    assert!((sol.poly.eval(0.5) - 1.0).abs() < 1e-15);
}
