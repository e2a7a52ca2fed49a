//! Odd polynomials `p(x) = a0 x + a1 x^3 + ... + aq x^(2q+1)`.
//!
//! Every evaluation goes through `p(x) = x * h(x^2)` with `h` in Horner form,
//! which is also how the matrix iteration applies them.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// An odd polynomial stored by the coefficients of its odd monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OddPolynomial {
    coeffs: Vec<f64>,
}

impl OddPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("an odd polynomial needs at least one coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn cubic(a: f64, b: f64) -> Self {
        Self { coeffs: vec![a, b] }
    }

    pub fn quintic(a: f64, b: f64, c: f64) -> Self {
        Self {
            coeffs: vec![a, b, c],
        }
    }

    /// Degree-3 Newton–Schulz polynomial `(3x - x^3) / 2`.
    pub fn newton_schulz_3() -> Self {
        Self::cubic(1.5, -0.5)
    }

    /// Degree-5 Newton–Schulz (Padé) polynomial `(15x - 10x^3 + 3x^5) / 8`.
    pub fn newton_schulz_5() -> Self {
        Self::quintic(15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0)
    }

    /// Padé polynomial of the given degree (3 or 5), the fixed point of every schedule.
    pub fn pade(degree: usize) -> Result<Self> {
        match degree {
            3 => Ok(Self::newton_schulz_3()),
            5 => Ok(Self::newton_schulz_5()),
            d => Err(domain(format!("no Padé polynomial for degree {d}"))),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of odd monomials minus one, so `degree() == 2 * q() + 1`.
    pub fn q(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn degree(&self) -> usize {
        2 * self.q() + 1
    }

    /// `h(y)` where `p(x) = x h(x^2)`.
    pub fn eval_h(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        x * self.eval_h(x * x)
    }

    /// `p'(x) = sum (2k+1) a_k x^(2k)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let y = x * x;
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * y + (2 * k + 1) as f64 * c)
    }

    /// The polynomial `x -> p(x / s)`: coefficient `a_k` becomes `a_k / s^(2k+1)`.
    pub fn with_input_scale(&self, s: f64) -> Self {
        let s2 = s * s;
        let mut pow = s;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let out = c / pow;
                pow *= s2;
                out
            })
            .collect();
        Self { coeffs }
    }

    /// The polynomial `x -> s * p(x)`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Real positive critical points of `p`, ascending.
    ///
    /// Closed form up to degree 5: the derivative is a polynomial of degree
    /// at most two in `y = x^2`.
    pub fn positive_critical_points(&self) -> Vec<f64> {
        let ys: Vec<f64> = match *self.coeffs.as_slice() {
            [_] => vec![],
            [a, b] => {
                if b == 0.0 {
                    vec![]
                } else {
                    vec![-a / (3.0 * b)]
                }
            }
            [a, b, c] => quadratic_roots(5.0 * c, 3.0 * b, a),
            _ => unimplemented!("critical points are only available up to degree 5"),
        };
        let mut xs: Vec<f64> = ys
            .into_iter()
            .filter(|y| y.is_finite() && *y > 0.0)
            .map(f64::sqrt)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

impl TryFrom<Vec<f64>> for OddPolynomial {
    type Error = crate::error::Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<OddPolynomial> for Vec<f64> {
    fn from(p: OddPolynomial) -> Self {
        p.coeffs
    }
}

/// Evaluate `p` at `x`.
pub fn eval_poly(p: &OddPolynomial, x: f64) -> f64 {
    p.eval(x)
}

/// Real roots of `a y^2 + b y + c`, degenerating to the linear case when `a == 0`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    // Stable form: avoid cancellation between -b and sqrt(disc).
    let s = disc.sqrt();
    let t = -0.5 * (b + b.signum() * s);
    if t == 0.0 {
        return vec![0.0];
    }
    vec![t / a, c / t]
}
