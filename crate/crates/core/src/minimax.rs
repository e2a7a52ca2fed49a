//! Best uniform approximation of the constant 1 on `[l, u]` by odd polynomials.
//!
//! Degree 3 has a closed form (a rescaled Newton–Schulz cubic). Degree 5 uses a
//! four-point exchange: the two endpoints are always extrema of the error, and
//! the two interior extrema are the roots of a quadratic in `x^2`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{domain, Error, Result};
use crate::poly::OddPolynomial;

/// Ratio threshold `l/u` above which the scaled Padé quintic is returned as is.
pub const DEFAULT_PADE_THRESHOLD: f64 = 1.0 - 5e-6;

/// Stop the exchange once successive levelled errors differ by at most this.
pub const DEFAULT_REMEZ_TOL: f64 = 1e-15;

/// Hard cap on exchange iterations.
pub const DEFAULT_REMEZ_MAX_ITER: usize = 50;

/// Points at which `1 - p` alternates in sign with a common magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EquioscillationCertificate {
    /// Ascending abscissae, endpoints included.
    pub points: Vec<f64>,
    /// Common magnitude of the error at `points`.
    pub amplitude: f64,
    /// Sign of `1 - p(points[0])`.
    pub sign: f64,
}

/// Why [`verify_equioscillation`] declined to certify.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificationFailure {
    /// Fewer (or more) extrema on the interval than the degree requires.
    WrongCount { found: usize, expected: usize },
    /// Consecutive extrema have the same sign.
    NoAlternation { index: usize },
    /// Extremal magnitudes differ by more than the tolerance.
    UnequalAmplitude { spread: f64 },
    /// Only degrees 3 and 5 can be certified.
    UnsupportedDegree(usize),
}

/// Closed-form minimax odd cubic: `beta * p_ns(alpha x)` with `p_ns(x) = (3x - x^3)/2`.
///
/// Accepts `l = 0`, where the formula is still well defined (error 1).
pub fn optimal_cubic(l: f64, u: f64) -> Result<OddPolynomial> {
    if !(l >= 0.0 && u > 0.0 && l <= u && u.is_finite()) {
        return Err(domain(format!("optimal_cubic needs 0 <= l <= u, got [{l}, {u}]")));
    }
    let alpha = (3.0 / (u * u + l * u + l * l)).sqrt();
    let alpha3 = alpha * alpha * alpha;
    let beta = 4.0 / (2.0 + l * u * (l + u) * alpha3);
    Ok(OddPolynomial::cubic(1.5 * beta * alpha, -0.5 * beta * alpha3))
}

/// Levelled error `E = beta - 1` of [`optimal_cubic`].
pub fn optimal_cubic_error(l: f64, u: f64) -> Result<f64> {
    let p = optimal_cubic(l, u)?;
    Ok(1.0 - p.eval(l))
}

/// Tuning knobs for [`remez_quintic_with`].
#[derive(Debug, Clone, Copy)]
pub struct RemezOptions {
    pub pade_threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RemezOptions {
    fn default() -> Self {
        Self {
            pade_threshold: DEFAULT_PADE_THRESHOLD,
            tol: DEFAULT_REMEZ_TOL,
            max_iter: DEFAULT_REMEZ_MAX_ITER,
        }
    }
}

/// Output of the degree-5 solver.
#[derive(Debug, Clone)]
pub struct RemezSolution {
    pub poly: OddPolynomial,
    /// Final trial set with its levelled error; `None` on the Padé branch,
    /// where the interval is too narrow for four distinct extrema.
    pub certificate: Option<EquioscillationCertificate>,
    /// Number of linear solves performed.
    pub iterations: usize,
}

impl RemezSolution {
    pub fn is_pade(&self) -> bool {
        self.certificate.is_none()
    }
}

/// Levelled errors this small carry no information in binary64.
const ROUNDING_LEVEL: f64 = 64.0 * f64::EPSILON;

fn pade_solution(u: f64) -> RemezSolution {
    RemezSolution {
        poly: OddPolynomial::newton_schulz_5().with_input_scale(u),
        certificate: None,
        iterations: 0,
    }
}

/// Minimax odd quintic for the constant 1 on `[l, u]` with default options.
pub fn remez_quintic(l: f64, u: f64) -> Result<RemezSolution> {
    remez_quintic_with(l, u, &RemezOptions::default())
}

pub fn remez_quintic_with(l: f64, u: f64, opts: &RemezOptions) -> Result<RemezSolution> {
    if !(l > 0.0 && l <= u && u.is_finite()) {
        return Err(domain(format!("remez_quintic needs 0 < l <= u, got [{l}, {u}]")));
    }
    if l == u || l / u >= opts.pade_threshold {
        return Ok(pade_solution(u));
    }

    let mut x1 = (3.0 * l + u) / 4.0;
    let mut x2 = (l + 3.0 * u) / 4.0;
    let mut prev_e = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let (a, b, c, e) = solve_levelled(l, x1, x2, u).ok_or(Error::RemezNoConvergence {
            lo: l,
            hi: u,
            iterations: iter,
        })?;
        let trial = [l, x1, x2, u];
        let converged = (prev_e.abs() - e.abs()).abs() <= opts.tol;
        if converged {
            return Ok(RemezSolution {
                poly: OddPolynomial::quintic(a, b, c),
                certificate: Some(EquioscillationCertificate {
                    points: trial.to_vec(),
                    amplitude: e.abs(),
                    sign: e.signum(),
                }),
                iterations: iter,
            });
        }
        prev_e = e;

        // interior extrema: 5c y^2 + 3b y + a = 0 with y = x^2
        let disc = (9.0 * b * b - 20.0 * a * c).sqrt();
        let n1 = ((-3.0 * b - disc) / (10.0 * c)).sqrt();
        let n2 = ((-3.0 * b + disc) / (10.0 * c)).sqrt();
        if !(n1.is_finite() && n2.is_finite() && l < n1 && n1 < n2 && n2 < u) {
            // just below the threshold the levelled error is pure rounding and
            // the exchange breaks down; the Pade polynomial is optimal to that level
            if e.abs() <= ROUNDING_LEVEL {
                return Ok(pade_solution(u));
            }
            return Err(Error::RemezNoConvergence {
                lo: l,
                hi: u,
                iterations: iter,
            });
        }
        x1 = n1;
        x2 = n2;
    }
    Err(Error::RemezNoConvergence {
        lo: l,
        hi: u,
        iterations: opts.max_iter,
    })
}

/// Solve `p(l) = 1-E, p(x1) = 1+E, p(x2) = 1-E, p(u) = 1+E` for `(a, b, c, E)`.
fn solve_levelled(l: f64, x1: f64, x2: f64, u: f64) -> Option<(f64, f64, f64, f64)> {
    let row = |x: f64| [x, x.powi(3), x.powi(5)];
    let [r0, r1, r2, r3] = [row(l), row(x1), row(x2), row(u)];
    #[rustfmt::skip]
    let lhs = Matrix4::new(
        r0[0], r0[1], r0[2],  1.0,
        r1[0], r1[1], r1[2], -1.0,
        r2[0], r2[1], r2[2],  1.0,
        r3[0], r3[1], r3[2], -1.0,
    );
    let sol = lhs.lu().solve(&Vector4::repeat(1.0))?;
    sol.iter()
        .all(|v| v.is_finite())
        .then(|| (sol[0], sol[1], sol[2], sol[3]))
}

/// Check that `1 - p` equioscillates on `[l, u]` at `(deg + 1)/2 + 1` extrema.
///
/// Candidates are the endpoints plus the closed-form critical points of `p`
/// strictly inside the interval. `tol` bounds the absolute spread of the
/// extremal magnitudes.
pub fn verify_equioscillation(
    p: &OddPolynomial,
    l: f64,
    u: f64,
    tol: f64,
) -> std::result::Result<EquioscillationCertificate, CertificationFailure> {
    let degree = p.degree();
    if degree != 3 && degree != 5 {
        return Err(CertificationFailure::UnsupportedDegree(degree));
    }
    let expected = p.q() + 2;

    let mut points = vec![l];
    points.extend(
        p.positive_critical_points()
            .into_iter()
            .filter(|&x| x > l && x < u),
    );
    points.push(u);
    points.dedup();
    if points.len() != expected {
        return Err(CertificationFailure::WrongCount {
            found: points.len(),
            expected,
        });
    }

    let errs: Vec<f64> = points.iter().map(|&x| 1.0 - p.eval(x)).collect();
    for (i, w) in errs.windows(2).enumerate() {
        if w[0].signum() == w[1].signum() || w[0] == 0.0 || w[1] == 0.0 {
            return Err(CertificationFailure::NoAlternation { index: i });
        }
    }
    let (lo, hi) = errs
        .iter()
        .map(|e| e.abs())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e), hi.max(e)));
    if hi - lo > tol {
        return Err(CertificationFailure::UnequalAmplitude { spread: hi - lo });
    }
    Ok(EquioscillationCertificate {
        points,
        amplitude: hi,
        sign: errs[0].signum(),
    })
}

/// Exact `max |1 - p(x)|` over `[l, u]`, from the endpoints and interior critical points.
pub fn max_error(p: &OddPolynomial, l: f64, u: f64) -> f64 {
    let interior = p
        .positive_critical_points()
        .into_iter()
        .filter(|&x| x > l && x < u);
    [l, u]
        .into_iter()
        .chain(interior)
        .map(|x| (1.0 - p.eval(x)).abs())
        .fold(0.0, f64::max)
}
