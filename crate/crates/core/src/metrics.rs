//! Error metrics of an approximate polar factor against the SVD reference.

use crate::error::{domain, Error, Result};
use crate::linalg::{from_na, spectral_norm, to_na, Svd, RANK_CUTOFF};
use crate::matrix::{MatrixBuffer, Precision};

pub const DEFAULT_GAMMA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `||polar(M) - X||_2`
    pub spectral_error: f64,
    /// `||polar(M) - X||_F / ||polar(M)||_F`
    pub frob_error: f64,
    /// Frobenius cosine between `polar(M)` and `X`.
    pub cosine_sim: f64,
    /// Error restricted to the singular directions above `gamma * sigma_max`.
    pub truncated_error: f64,
}

/// SVD-derived quantities for one input matrix, computed once and reused
/// across every iterate being scored.
#[derive(Debug, Clone)]
pub struct PolarReference {
    polar: MatrixBuffer,
    truncated: MatrixBuffer,
    /// `U1 U1^T` and `V1 V1^T` for the retained directions.
    left_proj: MatrixBuffer,
    right_proj: MatrixBuffer,
    gamma: f64,
}

impl PolarReference {
    pub fn new(m: &MatrixBuffer, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(domain(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        let m = m.to_precision(Precision::F64);
        if m.frobenius_norm() == 0.0 {
            return Err(domain("the zero matrix has no polar factor"));
        }
        let svd = Svd::new(&m)?;
        let polar = svd.leading_polar(svd.rank_above(RANK_CUTOFF));
        let k = svd.rank_above(gamma);
        let truncated = svd.leading_polar(k);
        let u1 = svd.u.columns(0, k);
        let v1 = svd.v.columns(0, k);
        Ok(Self {
            polar,
            truncated,
            left_proj: from_na(&(u1 * u1.transpose())),
            right_proj: from_na(&(v1 * v1.transpose())),
            gamma,
        })
    }

    pub fn polar(&self) -> &MatrixBuffer {
        &self.polar
    }

    pub fn truncated_polar(&self) -> &MatrixBuffer {
        &self.truncated
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn spectral_error(&self, x: &MatrixBuffer) -> Result<f64> {
        self.check_shape(x)?;
        spectral_norm(&self.polar.sub(&x.to_precision(Precision::F64))?)
    }

    pub fn metrics(&self, x: &MatrixBuffer) -> Result<Metrics> {
        self.check_shape(x)?;
        let x = x.to_precision(Precision::F64);
        let diff = self.polar.sub(&x)?;
        let polar_f = self.polar.frobenius_norm();
        let x_f = x.frobenius_norm();
        let cosine_sim = if x_f == 0.0 {
            0.0
        } else {
            self.polar.dot(&x) / (polar_f * x_f)
        };

        let projected = to_na(&self.left_proj) * to_na(&x) * to_na(&self.right_proj);
        let trunc_diff = self.truncated.sub(&from_na(&projected))?;
        Ok(Metrics {
            spectral_error: spectral_norm(&diff)?,
            frob_error: diff.frobenius_norm() / polar_f,
            cosine_sim,
            truncated_error: trunc_diff.frobenius_norm() / self.truncated.frobenius_norm(),
        })
    }

    fn check_shape(&self, x: &MatrixBuffer) -> Result<()> {
        if x.shape() != self.polar.shape() {
            return Err(Error::Shape(format!(
                "iterate is {:?} but the reference is {:?}",
                x.shape(),
                self.polar.shape()
            )));
        }
        Ok(())
    }
}

/// All four metrics of `x` as an approximation of `polar(m)`.
pub fn metrics(x: &MatrixBuffer, m: &MatrixBuffer, gamma: f64) -> Result<Metrics> {
    PolarReference::new(m, gamma)?.metrics(x)
}
