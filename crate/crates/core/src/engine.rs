//! Online stage: apply odd polynomials to matrices.
//!
//! An odd polynomial acts on a rectangular matrix through its Gram matrix:
//! `p(X) = X h(X^T X) = h(X X^T) X`. The smaller Gram matrix is always used.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::accel::{self, FastApplyConfig};
use crate::error::{domain, Error, Result};
use crate::matrix::{MatrixBuffer, Precision};
use crate::poly::OddPolynomial;
use crate::schedule::Schedule;

/// Added to the Frobenius norm before dividing.
pub const DEFAULT_EPS_ADD: f64 = 1e-2;

/// How the input is scaled so that its spectral norm is at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `M / (||M||_F + eps_add)`.
    Frobenius { eps_add: f64 },
    /// `M / (1.01 ||M||_F + 1e-7)`, the variant shipped with the runtime table.
    Padded,
    /// Leave the input alone; the caller guarantees `||M||_2 <= 1`.
    None,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::Frobenius {
            eps_add: DEFAULT_EPS_ADD,
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(Self::default()),
            "padded" => Ok(Self::Padded),
            "none" => Ok(Self::None),
            _ => s
                .strip_prefix("frobenius:")
                .and_then(|v| v.parse().ok())
                .map(|eps_add| Self::Frobenius { eps_add })
                .ok_or_else(|| domain(format!("unknown normalization `{s}`"))),
        }
    }
}

impl Normalization {
    pub fn divisor(&self, frob: f64) -> f64 {
        match *self {
            Normalization::Frobenius { eps_add } => frob + eps_add,
            Normalization::Padded => frob * 1.01 + 1e-7,
            Normalization::None => 1.0,
        }
    }
}

/// `M / (||M||_F + eps_add)`.
pub fn normalize(m: &MatrixBuffer, eps_add: f64) -> Result<MatrixBuffer> {
    normalize_with(m, Normalization::Frobenius { eps_add })
}

pub fn normalize_with(m: &MatrixBuffer, mode: Normalization) -> Result<MatrixBuffer> {
    let frob = m.frobenius_norm();
    if frob == 0.0 {
        return Err(domain("cannot normalize the zero matrix"));
    }
    match mode {
        Normalization::None => Ok(m.clone()),
        _ => Ok(m.scale(1.0 / mode.divisor(frob))),
    }
}

/// Which Gram matrix a polynomial step goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramSide {
    /// `X^T X` for tall inputs, `X X^T` otherwise.
    #[default]
    Auto,
    /// `X h(X^T X)`.
    Right,
    /// `h(X X^T) X`.
    Left,
}

/// `h(Y)` by Horner's rule, where `p(x) = x h(x^2)`; uses `q - 1` products.
pub(crate) fn horner_h(y: &MatrixBuffer, p: &OddPolynomial) -> Result<MatrixBuffer> {
    let c = p.coeffs();
    let q = c.len() - 1;
    let n = y.rows();
    let eye = MatrixBuffer::identity(n).to_precision(y.precision());
    if q == 0 {
        return Ok(eye.scale(c[0]));
    }
    let mut h = y.lin_comb(c[q], &eye, c[q - 1])?;
    for k in (0..q - 1).rev() {
        h = y.matmul(&h)?.add_identity(c[k])?;
    }
    Ok(h)
}

/// One polynomial step `a X + b X (X^T X) + c X (X^T X)^2 + ...`.
pub fn poly_step(x: &MatrixBuffer, p: &OddPolynomial) -> Result<MatrixBuffer> {
    poly_step_side(x, p, GramSide::Auto)
}

pub fn poly_step_side(x: &MatrixBuffer, p: &OddPolynomial, side: GramSide) -> Result<MatrixBuffer> {
    let right = match side {
        GramSide::Auto => x.rows() > x.cols(),
        GramSide::Right => true,
        GramSide::Left => false,
    };
    let out = if right {
        x.matmul(&horner_h(&x.gram(), p)?)?
    } else {
        horner_h(&x.outer_gram(), p)?.matmul(x)?
    };
    if !out.is_finite() {
        return Err(Error::NonFinite {
            context: format!("a degree-{} polynomial step", p.degree()),
        });
    }
    Ok(out)
}

/// Apply `polys[0], polys[1], ...` without normalizing, `steps` times in
/// total, repeating the last polynomial once the list is exhausted.
pub fn compose(x: &MatrixBuffer, polys: &[OddPolynomial], steps: usize) -> Result<MatrixBuffer> {
    let mut x = x.clone();
    for t in 0..steps {
        x = poly_step(&x, step_poly(polys, t)).map_err(|e| at_iteration(e, t + 1))?;
    }
    Ok(x)
}

pub(crate) fn step_poly(polys: &[OddPolynomial], t: usize) -> &OddPolynomial {
    &polys[t.min(polys.len() - 1)]
}

fn at_iteration(e: Error, t: usize) -> Error {
    match e {
        Error::NonFinite { context } => Error::NonFinite {
            context: format!("iteration {t} ({context})"),
        },
        other => other,
    }
}

/// Whether to use the two-rectangular-product scheme for tall or wide inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FastMode {
    /// Decide from the aspect ratio and step count.
    Auto,
    On,
    #[default]
    Off,
}

impl FromStr for FastMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(FastMode::Auto),
            "on" => Ok(FastMode::On),
            "off" => Ok(FastMode::Off),
            other => Err(domain(format!("fast mode must be auto|on|off, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ApplyOptions {
    pub precision: Precision,
    pub normalization: Normalization,
    pub fast: FastMode,
    pub fast_config: FastApplyConfig,
}

impl ApplyOptions {
    pub fn with_precision(precision: Precision) -> Self {
        Self {
            precision,
            ..Default::default()
        }
    }
}

/// Normalize `m` and apply `steps` polynomial steps at the requested precision.
pub fn apply_polys(
    m: &MatrixBuffer,
    polys: &[OddPolynomial],
    steps: usize,
    opts: &ApplyOptions,
) -> Result<MatrixBuffer> {
    if steps == 0 {
        return Err(domain("at least one step is required"));
    }
    if polys.is_empty() {
        return Err(domain("no polynomials to apply"));
    }
    let x0 = normalize_with(&m.to_precision(Precision::F64), opts.normalization)?
        .to_precision(opts.precision);

    let tall = x0.rows() >= x0.cols();
    let aspect = x0.rows().max(x0.cols()) as f64 / x0.rows().min(x0.cols()) as f64;
    let use_fast = x0.rows() != x0.cols()
        && match opts.fast {
            FastMode::Off => false,
            FastMode::On => true,
            FastMode::Auto => accel::should_use_fast(aspect, steps),
        };
    if !use_fast {
        return compose(&x0, polys, steps);
    }
    let expanded: Vec<OddPolynomial> = (0..steps).map(|t| step_poly(polys, t).clone()).collect();
    if tall {
        accel::fast_apply(&x0, &expanded, &opts.fast_config)
    } else {
        Ok(accel::fast_apply(&x0.transpose(), &expanded, &opts.fast_config)?.transpose())
    }
}

/// Normalize with the default `eps_add` and run the schedule's runtime polynomials.
pub fn apply_schedule(
    m: &MatrixBuffer,
    s: &Schedule,
    steps: usize,
    precision: Precision,
) -> Result<MatrixBuffer> {
    apply_polys(m, s.polys(), steps, &ApplyOptions::with_precision(precision))
}

/// Like [`apply_polys`] on the naive path, calling `visit(t, X_t)` for the
/// normalized input (`t = 0`) and after every step.
pub fn iterate(
    m: &MatrixBuffer,
    polys: &[OddPolynomial],
    steps: usize,
    opts: &ApplyOptions,
    mut visit: impl FnMut(usize, &MatrixBuffer) -> Result<()>,
) -> Result<MatrixBuffer> {
    if polys.is_empty() {
        return Err(domain("no polynomials to apply"));
    }
    let mut x = normalize_with(&m.to_precision(Precision::F64), opts.normalization)?
        .to_precision(opts.precision);
    visit(0, &x)?;
    for t in 0..steps {
        x = poly_step(&x, step_poly(polys, t)).map_err(|e| at_iteration(e, t + 1))?;
        visit(t + 1, &x)?;
    }
    Ok(x)
}

/// Named fixed-coefficient iterations used as baselines.
#[derive(Debug, Clone)]
pub struct BaselineRegistry {
    entries: BTreeMap<String, Vec<OddPolynomial>>,
}

impl Default for BaselineRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: BTreeMap::new(),
        };
        r.insert("newton_schulz_3", vec![OddPolynomial::newton_schulz_3()]);
        r.insert("ns3", vec![OddPolynomial::newton_schulz_3()]);
        r.insert("newton_schulz_5", vec![OddPolynomial::newton_schulz_5()]);
        r.insert("ns5", vec![OddPolynomial::newton_schulz_5()]);
        r.insert("jordan", vec![OddPolynomial::quintic(3.4445, -4.7750, 2.0315)]);
        r
    }
}

#[derive(Deserialize)]
struct CoefficientList {
    polys: Vec<Vec<f64>>,
}

impl BaselineRegistry {
    pub fn insert(&mut self, name: impl Into<String>, polys: Vec<OddPolynomial>) {
        self.entries.insert(name.into(), polys);
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<&[OddPolynomial]> {
        self.entries
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownMethod {
                name: name.to_string(),
                available: self.names(),
            })
    }

    /// Register the runtime polynomials of a schedule file, or of a bare
    /// `{"polys": [[...], ...]}` coefficient list.
    pub fn load_file(&mut self, name: impl Into<String>, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let polys = match Schedule::from_json(&text) {
            Ok(s) => s.polys().to_vec(),
            Err(_) => {
                let list: CoefficientList = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    line: e.line(),
                    message: e.to_string(),
                })?;
                list.polys
                    .into_iter()
                    .map(OddPolynomial::new)
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if polys.is_empty() {
            return Err(Error::InvalidSchedule("coefficient list is empty".into()));
        }
        self.insert(name, polys);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exact_polar, spectral_norm};

    fn diag_close(m: &MatrixBuffer, v: f64, tol: f64) {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let e = if i == j { v } else { 0.0 };
                assert!((m.get(i, j) - e).abs() <= tol, "({i},{j}) = {}", m.get(i, j));
            }
        }
    }

    #[test]
    fn normalize_identity() {
        let n = normalize(&MatrixBuffer::identity(3), 0.0).unwrap();
        diag_close(&n, 1.0 / 3f64.sqrt(), 1e-16);
    }

    #[test]
    fn normalize_unit_frobenius() {
        let m = MatrixBuffer::from_rows(&[vec![0.6, 0.0], vec![0.0, 0.8]]).unwrap();
        let n = normalize(&m, 1e-2).unwrap();
        assert!((n.get(1, 1) - 0.8 / 1.01).abs() < 1e-16);
    }

    #[test]
    fn normalize_zero_fails() {
        assert!(normalize(&MatrixBuffer::zeros(2, 3), 1e-2).is_err());
    }

    #[test]
    fn newton_schulz_fixes_identity() {
        let x = poly_step(&MatrixBuffer::identity(4), &OddPolynomial::newton_schulz_3()).unwrap();
        diag_close(&x, 1.0, 0.0);
    }

    #[test]
    fn newton_schulz_on_half() {
        let x = MatrixBuffer::identity(3).scale(0.5);
        let y = poly_step(&x, &OddPolynomial::quintic(1.5, -0.5, 0.0)).unwrap();
        diag_close(&y, 0.6875, 1e-16);
    }

    #[test]
    fn rank_one_converges_to_outer_product() {
        let u = [0.6, 0.8, 0.0];
        let v = [1.0, 0.0];
        let m = MatrixBuffer::from_fn(3, 2, |i, j| 0.5 * u[i] * v[j]);
        let x = apply_polys(
            &m,
            &[OddPolynomial::newton_schulz_5()],
            30,
            &ApplyOptions::default(),
        )
        .unwrap();
        let target = MatrixBuffer::from_fn(3, 2, |i, j| u[i] * v[j]);
        assert!(x.max_abs_diff(&target) < 1e-12);
        assert!(spectral_norm(&x.sub(&exact_polar(&m).unwrap()).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn repeats_last_polynomial() {
        let x = MatrixBuffer::identity(2).scale(0.3);
        let polys = [OddPolynomial::newton_schulz_3(), OddPolynomial::newton_schulz_5()];
        let a = compose(&x, &polys, 4).unwrap();
        let mut b = poly_step(&x, &polys[0]).unwrap();
        for _ in 0..3 {
            b = poly_step(&b, &polys[1]).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let x = MatrixBuffer::identity(2).scale(1e80);
        match compose(&x, &[OddPolynomial::newton_schulz_5()], 3) {
            Err(Error::NonFinite { context }) => assert!(context.contains("iteration 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn registry() {
        let r = BaselineRegistry::default();
        assert_eq!(r.get("jordan").unwrap()[0].coeffs(), &[3.4445, -4.7750, 2.0315]);
        match r.get("you") {
            Err(Error::UnknownMethod { available, .. }) => assert!(available.contains(&"ns5".into())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn registry_loads_bare_lists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("six.json");
        std::fs::write(&path, r#"{"polys": [[3.0, -3.2, 1.2], [2.0, -1.5, 0.5]]}"#).unwrap();
        let mut r = BaselineRegistry::default();
        r.load_file("custom", &path).unwrap();
        assert_eq!(r.get("custom").unwrap().len(), 2);
    }

    #[test]
    fn normalization_parse() {
        assert_eq!("padded".parse::<Normalization>().unwrap(), Normalization::Padded);
        assert_eq!(
            "frobenius:0.5".parse::<Normalization>().unwrap(),
            Normalization::Frobenius { eps_add: 0.5 }
        );
        assert!("bogus".parse::<Normalization>().is_err());
    }
}
