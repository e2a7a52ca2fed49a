//! Binary64 SVD-based reference computations (test oracles and metrics).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{MatrixBuffer, Precision};

/// Singular values below this fraction of the largest are treated as zero
/// when forming the polar factor.
pub const RANK_CUTOFF: f64 = 1e-13;

/// Sweep cap for the SVD; nalgebra treats 0 as unlimited and can spin on bad input.
const SVD_MAX_ITER: usize = 10_000;

fn svd_input(m: &MatrixBuffer) -> Result<DMatrix<f64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite {
            context: "SVD input".into(),
        });
    }
    Ok(to_na(m))
}

pub(crate) fn to_na(m: &MatrixBuffer) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_na(m: &DMatrix<f64>) -> MatrixBuffer {
    MatrixBuffer::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `M = U diag(s) V^T` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k`
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    /// `cols x k`
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(m: &MatrixBuffer) -> Result<Self> {
        let svd = svd_input(m)?
            .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
            .ok_or(Error::Svd)?;
        let u = svd.u.ok_or(Error::Svd)?;
        let v_t = svd.v_t.ok_or(Error::Svd)?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let s = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = u.select_columns(&order);
        let v = v_t.transpose().select_columns(&order);
        Ok(Self { u, s, v })
    }

    /// `U_k V_k^T` over the leading `k` singular triplets.
    pub fn leading_polar(&self, k: usize) -> MatrixBuffer {
        let u = self.u.columns(0, k);
        let v = self.v.columns(0, k);
        from_na(&(u * v.transpose()))
    }

    /// Number of singular values above `frac * sigma_max`.
    pub fn rank_above(&self, frac: f64) -> usize {
        let cut = frac * self.s.first().copied().unwrap_or(0.0);
        self.s.iter().take_while(|&&x| x > cut).count()
    }
}

/// Singular values, descending.
pub fn singular_values(m: &MatrixBuffer) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = svd_input(m)?
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::Svd)?
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn spectral_norm(m: &MatrixBuffer) -> Result<f64> {
    Ok(singular_values(m)?[0])
}

/// Polar factor `U V^T` from a rank-reduced SVD.
pub fn exact_polar(m: &MatrixBuffer) -> Result<MatrixBuffer> {
    let m = m.to_precision(Precision::F64);
    if m.frobenius_norm() == 0.0 {
        return Err(crate::error::domain("the zero matrix has no polar factor"));
    }
    let svd = Svd::new(&m)?;
    Ok(svd.leading_polar(svd.rank_above(RANK_CUTOFF)))
}
