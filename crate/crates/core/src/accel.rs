//! Accelerations: the fast iteration for tall matrices and a spectrum-aware
//! first step for matrices with one dominant singular value.
//!
//! The fast iteration never forms the intermediate iterates. Writing each
//! step as `p_t(x) = x h_t(x^2)`, the composition satisfies
//! `(p_T o ... o p_1)(X) = X Q_T` with `Q_0 = I`,
//! `R_t = Q_{t-1}^T Y Q_{t-1}` and `Q_t = Q_{t-1} h_t(R_t)`, `Y = X^T X`.
//! Only `Y` and the final `X Q_T` touch the tall dimension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{horner_h, poly_step};
use crate::error::{domain, Error, Result};
use crate::matrix::MatrixBuffer;
use crate::poly::OddPolynomial;

pub const DEFAULT_FIRST_PASS_REGULARIZATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastApplyConfig {
    /// Steps per segment; `None` never restarts.
    pub restart_interval: Option<usize>,
    /// Added to the diagonal of the first segment's Gram matrix.
    pub first_pass_regularization: f64,
}

impl Default for FastApplyConfig {
    fn default() -> Self {
        Self {
            restart_interval: None,
            first_pass_regularization: DEFAULT_FIRST_PASS_REGULARIZATION,
        }
    }
}

impl FastApplyConfig {
    /// No restarts and no regularization: the exact-arithmetic composition.
    pub fn exact() -> Self {
        Self {
            restart_interval: None,
            first_pass_regularization: 0.0,
        }
    }

    pub fn restart_every(mut self, k: usize) -> Self {
        self.restart_interval = Some(k);
        self
    }
}

/// `(p_T o ... o p_1)(X)` for tall `X` using two rectangular products per segment.
pub fn fast_apply(
    x: &MatrixBuffer,
    polys: &[OddPolynomial],
    cfg: &FastApplyConfig,
) -> Result<MatrixBuffer> {
    if x.rows() <= x.cols() {
        return Err(Error::Shape(format!(
            "fast_apply needs a tall matrix, got {}x{}; transpose first",
            x.rows(),
            x.cols()
        )));
    }
    let interval = cfg.restart_interval.unwrap_or(usize::MAX);
    if interval == 0 {
        return Err(domain("restart_interval must be at least 1"));
    }
    let n = x.cols();
    let eye = MatrixBuffer::identity(n).to_precision(x.precision());
    let mut x = x.clone();
    for (seg, chunk) in polys.chunks(interval.min(polys.len().max(1))).enumerate() {
        let mut y = x.gram();
        if seg == 0 && cfg.first_pass_regularization != 0.0 {
            y = y.add_identity(cfg.first_pass_regularization)?;
        }
        let mut q = eye.clone();
        for p in chunk {
            let r = q.transpose().matmul(&y)?.matmul(&q)?;
            q = q.matmul(&horner_h(&r, p)?)?;
        }
        if !q.is_finite() {
            return Err(Error::NonFinite {
                context: format!(
                    "fast segment {} (Q blew up; try a smaller restart interval)",
                    seg + 1
                ),
            });
        }
        x = x.matmul(&q)?;
    }
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "fast apply".into(),
        });
    }
    Ok(x)
}

/// The accumulated right factor `Q_T`, which tends to `(X^T X)^(-1/2)` for
/// convergent polynomials.
pub fn fast_right_factor(x: &MatrixBuffer, polys: &[OddPolynomial]) -> Result<MatrixBuffer> {
    let y = x.gram();
    let mut q = MatrixBuffer::identity(x.cols()).to_precision(x.precision());
    for p in polys {
        let r = q.transpose().matmul(&y)?.matmul(&q)?;
        q = q.matmul(&horner_h(&r, p)?)?;
    }
    Ok(q)
}

/// Multiply-adds, in units of `n^3`, for `steps` degree-`d` steps on an
/// `alpha n x n` matrix with the fast scheme and no restarts.
pub fn fast_cost(degree: usize, steps: usize, aspect: f64) -> f64 {
    (degree as f64 + 3.0) / 2.0 * steps as f64 + 2.0 * aspect
}

/// Same, for the naive step-by-step scheme.
pub fn naive_cost(degree: usize, steps: usize, aspect: f64) -> f64 {
    ((degree as f64 - 3.0) / 2.0 + 2.0 * aspect) * steps as f64
}

/// Whether the fast scheme needs fewer multiply-adds: `aspect > 1.5 T / (T - 1)`.
pub fn should_use_fast(aspect: f64, steps: usize) -> bool {
    steps >= 2 && aspect > 1.5 * steps as f64 / (steps as f64 - 1.0)
}

/// Certified lower bound on the top singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub z: f64,
    pub iters: usize,
}

/// Power iteration on `M^T M` from a seeded Gaussian start.
///
/// `z = ||M v||` for a unit vector `v`, hence `z <= sigma_1` (up to rounding).
pub fn power_lower_bound(m: &MatrixBuffer, iters: usize, seed: u64) -> PowerEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.cols();
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize_vec(&mut v);
    for _ in 0..iters {
        let mut w = mat_t_vec(m, &mat_vec(m, &v));
        if normalize_vec(&mut w) == 0.0 {
            break;
        }
        v = w;
    }
    let z = norm(&mat_vec(m, &v)).min(1.0);
    PowerEstimate { z, iters }
}

fn mat_vec(m: &MatrixBuffer, v: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn mat_t_vec(m: &MatrixBuffer, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &vi) in v.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(m.row(i)) {
            *o += a * vi;
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize_vec(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Admissible range for the power-method bound `z`.
pub const INIT_Z_MIN: f64 = std::f64::consts::FRAC_1_SQRT_2 + 1e-3;
pub const INIT_Z_MAX: f64 = 1.0 - 1e-6;

/// The odd cubic with `p(sqrt(1 - z^2)) = 1` and `p(z) = 1`, or `None` when
/// `z` is outside `[INIT_Z_MIN, INIT_Z_MAX]`.
pub fn spectrum_aware_cubic(z: f64) -> Option<OddPolynomial> {
    if !(INIT_Z_MIN..=INIT_Z_MAX).contains(&z) {
        return None;
    }
    let s = (1.0 - z * z).sqrt();
    let den = z * s * (2.0 * z * z - 1.0);
    let a = (z * z * (z + s) - s) / den;
    let b = (s - z) / den;
    Some(OddPolynomial::cubic(a, b))
}

/// First step for a unit-Frobenius `M` whose top singular value is at least `z`.
///
/// Returns `None` (caller keeps the standard schedule) when `z` is not admissible.
pub fn spectrum_aware_init(
    m: &MatrixBuffer,
    z: f64,
) -> Result<Option<(OddPolynomial, MatrixBuffer)>> {
    let Some(p) = spectrum_aware_cubic(z) else {
        return Ok(None);
    };
    let x = poly_step(m, &p)?;
    Ok(Some((p, x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::compose;
    use crate::linalg::singular_values;
    use crate::matrix::count_muladds;

    fn tall(m: usize, n: usize, seed: u64) -> MatrixBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = MatrixBuffer::new(m, n, data, Default::default()).unwrap();
        let f = x.frobenius_norm();
        x.scale(1.0 / f)
    }

    #[test]
    fn single_step_matches_poly_step() {
        let x = tall(12, 4, 1);
        let p = OddPolynomial::quintic(3.4445, -4.7750, 2.0315);
        let fast = fast_apply(&x, std::slice::from_ref(&p), &FastApplyConfig::exact()).unwrap();
        let naive = poly_step(&x, &p).unwrap();
        assert!(fast.max_abs_diff(&naive) < 1e-13);
    }

    #[test]
    fn restart_every_step_is_the_naive_path() {
        let x = tall(40, 5, 2);
        let polys = crate::schedule::default_schedule().polys().to_vec();
        let cfg = FastApplyConfig::exact().restart_every(1);
        assert_eq!(fast_apply(&x, &polys, &cfg).unwrap(), compose(&x, &polys, polys.len()).unwrap());
    }

    #[test]
    fn wide_input_rejected() {
        let x = tall(4, 4, 3);
        assert!(fast_apply(&x, &[OddPolynomial::newton_schulz_5()], &FastApplyConfig::exact()).is_err());
    }

    #[test]
    fn flop_model() {
        let (n, alpha, steps) = (8usize, 8usize, 6usize);
        let x = tall(n * alpha, n, 4);
        let polys = vec![OddPolynomial::newton_schulz_5(); steps];
        let (_, fast) = count_muladds(|| fast_apply(&x, &polys, &FastApplyConfig::exact()).unwrap());
        let (_, naive) = count_muladds(|| compose(&x, &polys, steps).unwrap());
        let n3 = (n * n * n) as f64;
        assert!((fast as f64 / n3 - fast_cost(5, steps, alpha as f64)).abs() < 1e-9);
        assert!((naive as f64 / n3 - naive_cost(5, steps, alpha as f64)).abs() < 1e-9);
    }

    #[test]
    fn crossover_rule() {
        assert!(should_use_fast(4.0, 6));
        assert!(!should_use_fast(1.0, 6));
        assert!(!should_use_fast(3.0, 2));
        assert!(should_use_fast(3.0001, 2));
        assert!(!should_use_fast(100.0, 1));
    }

    #[test]
    fn power_on_rank_one() {
        let m = MatrixBuffer::from_fn(3, 3, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let est = power_lower_bound(&m, 1, 7);
        assert!((est.z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_converges_on_diagonal() {
        let d = [0.9, 0.3, 0.2, 0.1];
        let f = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let m = MatrixBuffer::diag(&d.map(|x| x / f));
        let est = power_lower_bound(&m, 20, 11);
        let s1 = singular_values(&m).unwrap()[0];
        assert!(est.z <= s1 + 1e-15);
        assert!(s1 - est.z < 1e-6);
    }

    #[test]
    fn init_band() {
        assert!(spectrum_aware_cubic(0.70).is_none());
        assert!(spectrum_aware_cubic(1.0).is_none());
        assert!(spectrum_aware_cubic(0.9).is_some());
    }

    #[test]
    fn init_cubic_matches_linear_solve() {
        let z = 0.9f64;
        let s = (1.0 - z * z).sqrt();
        // Cramer's rule on [s s^3; z z^3] [a; b] = [1; 1]
        let det = s * z.powi(3) - s.powi(3) * z;
        let a = (z.powi(3) - s.powi(3)) / det;
        let b = (s - z) / det;
        let p = spectrum_aware_cubic(z).unwrap();
        assert!((p.coeffs()[0] - a).abs() < 1e-12);
        assert!((p.coeffs()[1] - b).abs() < 1e-12);
        assert!((p.eval(s) - 1.0).abs() < 1e-13);
        assert!((p.eval(z) - 1.0).abs() < 1e-13);
    }
}
