//! Synthetic test matrices and convergence experiments.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{iterate, ApplyOptions, BaselineRegistry};
use crate::error::{domain, Error, Result};
use crate::matrix::{MatrixBuffer, Precision};
use crate::metrics::PolarReference;
use crate::poly::OddPolynomial;
use crate::schedule::{Schedule, ScheduleBuilder};

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// `n` values evenly spaced in log scale, largest first.
    LogSpaced { min: f64, max: f64 },
    /// `sigma_j = j^-exponent`.
    PowerLaw { exponent: f64 },
    Explicit(Vec<f64>),
    /// A matrix read from disk as-is.
    File(PathBuf),
}

/// Recipe for a synthetic matrix `U diag(sigma) V^T` with random orthonormal factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn log_spaced(min: f64, max: f64, rows: usize, cols: usize) -> Self {
        Self {
            kind: SpectrumKind::LogSpaced { min, max },
            rows,
            cols,
            seed: 0,
        }
    }

    pub fn power_law(exponent: f64, n: usize) -> Self {
        Self {
            kind: SpectrumKind::PowerLaw { exponent },
            rows: n,
            cols: n,
            seed: 0,
        }
    }

    pub fn explicit(values: Vec<f64>, rows: usize, cols: usize) -> Self {
        Self {
            kind: SpectrumKind::Explicit(values),
            rows,
            cols,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The prescribed singular values, descending (`None` for file input).
    pub fn singular_values(&self) -> Option<Vec<f64>> {
        let k = self.rows.min(self.cols);
        let mut s = match &self.kind {
            SpectrumKind::LogSpaced { min, max } => {
                if k == 1 {
                    vec![*max]
                } else {
                    let ratio = (min / max).ln();
                    (0..k)
                        .map(|j| max * (ratio * j as f64 / (k - 1) as f64).exp())
                        .collect()
                }
            }
            SpectrumKind::PowerLaw { exponent } => {
                (1..=k).map(|j| (j as f64).powf(-exponent)).collect()
            }
            SpectrumKind::Explicit(v) => v.clone(),
            SpectrumKind::File(_) => return None,
        };
        s.sort_by(|a, b| b.total_cmp(a));
        Some(s)
    }

    fn validate(&self) -> Result<()> {
        if let Some(s) = self.singular_values() {
            if self.rows == 0 || self.cols == 0 {
                return Err(domain("matrix dimensions must be positive"));
            }
            if s.len() != self.rows.min(self.cols) {
                return Err(domain(format!(
                    "{} singular values for a {}x{} matrix",
                    s.len(),
                    self.rows,
                    self.cols
                )));
            }
            if s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(domain("singular values must be positive and finite"));
            }
            if let SpectrumKind::LogSpaced { min, max } = self.kind {
                if min > max {
                    return Err(domain("log spectrum needs min <= max"));
                }
            }
        }
        Ok(())
    }
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    /// `log:<min>:<max>:<n>[x<m>]`, `pow:<exp>:<n>`, `list:<s1>,<s2>,...[:<n>x<m>]`
    /// or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || domain(format!("cannot parse spectrum spec `{s}`"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let dims = |t: &str| -> Result<(usize, usize)> {
            match t.split_once('x') {
                Some((r, c)) => Ok((r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?)),
                None => {
                    let n = t.parse().map_err(|_| bad())?;
                    Ok((n, n))
                }
            }
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let spec = match kind {
            "log" => {
                let parts: Vec<&str> = rest.split(':').collect();
                let [min, max, d] = parts[..] else {
                    return Err(bad());
                };
                let (rows, cols) = dims(d)?;
                Self::log_spaced(num(min)?, num(max)?, rows, cols)
            }
            "pow" => {
                let parts: Vec<&str> = rest.split(':').collect();
                let [e, d] = parts[..] else {
                    return Err(bad());
                };
                let (rows, cols) = dims(d)?;
                Self {
                    kind: SpectrumKind::PowerLaw { exponent: num(e)? },
                    rows,
                    cols,
                    seed: 0,
                }
            }
            "list" => {
                let (vals, d) = match rest.split_once(':') {
                    Some((v, d)) => (v, Some(d)),
                    None => (rest, None),
                };
                let values = vals.split(',').map(num).collect::<Result<Vec<_>>>()?;
                let (rows, cols) = match d {
                    Some(d) => dims(d)?,
                    None => (values.len(), values.len()),
                };
                Self::explicit(values, rows, cols)
            }
            "file" => Self {
                kind: SpectrumKind::File(PathBuf::from(rest)),
                rows: 0,
                cols: 0,
                seed: 0,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Haar-distributed `n x k` matrix with orthonormal columns.
fn random_orthonormal(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(&mut *rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the distribution does not depend on the QR convention
    let signs = DMatrix::from_fn(k, k, |i, j| {
        if i == j && r[(i, i)] < 0.0 {
            -1.0
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    q * signs
}

/// Build the matrix described by `spec`.
pub fn gen_matrix(spec: &SpectrumSpec) -> Result<MatrixBuffer> {
    if let SpectrumKind::File(path) = &spec.kind {
        return MatrixBuffer::load(path);
    }
    spec.validate()?;
    let sigma = spec.singular_values().expect("not a file spec");
    let k = sigma.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = random_orthonormal(spec.rows, k, &mut rng);
    let v = random_orthonormal(spec.cols, k, &mut rng);
    let m = u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma)) * v.transpose();
    MatrixBuffer::new(spec.rows, spec.cols, m.transpose().as_slice().to_vec(), Precision::F64)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub spectral_error: f64,
    pub frob_error: f64,
    pub cosine_sim: f64,
    pub truncated_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub method: String,
    /// `T + 1` records; record 0 is the normalized input.
    pub records: Vec<IterationRecord>,
}

impl ConvergenceReport {
    pub fn spectral_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.spectral_error).collect()
    }
}

/// A named polynomial iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub polys: Vec<OddPolynomial>,
}

/// Resolve a method name for a run of `steps` iterations.
///
/// Accepted forms: any registry name, `polarexpress[:<l>]` (degree-5 greedy
/// schedule with default cushion and safety), `polarexpress3[:<l>]`
/// (degree 3), and `schedule:<path>`.
pub fn resolve_method(name: &str, steps: usize, registry: &BaselineRegistry) -> Result<Method> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let polys = match (head, arg) {
        ("polarexpress" | "polarexpress3", arg) => {
            let l = match arg {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| domain(format!("bad lower bound in `{name}`")))?,
                None => crate::schedule::DEFAULT_L_INIT,
            };
            let degree = if head == "polarexpress3" { 3 } else { 5 };
            ScheduleBuilder::new(l)
                .steps(steps.max(1))
                .degree(degree)
                .build()?
                .polys()
                .to_vec()
        }
        ("schedule", Some(path)) => Schedule::load(path)?.polys().to_vec(),
        _ => match registry.get(name) {
            Ok(p) => p.to_vec(),
            Err(Error::UnknownMethod { mut available, .. }) => {
                available.extend(
                    ["polarexpress[:<l>]", "polarexpress3[:<l>]", "schedule:<path>"]
                        .map(String::from),
                );
                return Err(Error::UnknownMethod {
                    name: name.to_string(),
                    available,
                });
            }
            Err(e) => return Err(e),
        },
    };
    Ok(Method {
        name: name.to_string(),
        polys,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub steps: usize,
    pub apply: ApplyOptions,
    pub gamma: f64,
    /// Run methods concurrently; results are identical to the sequential run
    /// apart from timings.
    pub parallel: bool,
    /// Record wall-clock seconds; when false the column is zero.
    pub timing: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            steps: 25,
            apply: ApplyOptions::default(),
            gamma: crate::metrics::DEFAULT_GAMMA,
            parallel: false,
            timing: true,
        }
    }
}

/// Score every iterate of every method against `polar(m)`.
pub fn run_convergence(
    m: &MatrixBuffer,
    methods: &[Method],
    opts: &BenchOptions,
) -> Result<Vec<ConvergenceReport>> {
    let reference = PolarReference::new(m, opts.gamma)?;
    let run_one = |method: &Method| -> Result<ConvergenceReport> {
        let mut records = Vec::with_capacity(opts.steps + 1);
        let mut clock = Instant::now();
        iterate(m, &method.polys, opts.steps, &opts.apply, |iter, x| {
            let seconds = if opts.timing {
                clock.elapsed().as_secs_f64()
            } else {
                0.0
            };
            let mt = reference.metrics(x)?;
            records.push(IterationRecord {
                iter,
                spectral_error: mt.spectral_error,
                frob_error: mt.frob_error,
                cosine_sim: mt.cosine_sim,
                truncated_error: mt.truncated_error,
                seconds,
            });
            clock = Instant::now();
            Ok(())
        })?;
        Ok(ConvergenceReport {
            method: method.name.clone(),
            records,
        })
    };
    if opts.parallel {
        methods.par_iter().map(run_one).collect()
    } else {
        methods.iter().map(run_one).collect()
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "iter",
    "spectral_error",
    "frob_error",
    "cosine_sim",
    "truncated_error",
    "seconds",
];

/// Write reports as `method,iter,spectral_error,frob_error,cosine_sim,truncated_error,seconds`.
pub fn write_csv<W: Write>(reports: &[ConvergenceReport], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for rep in reports {
        for r in &rep.records {
            wtr.write_record(&[
                rep.method.clone(),
                r.iter.to_string(),
                format!("{:e}", r.spectral_error),
                format!("{:e}", r.frob_error),
                format!("{:e}", r.cosine_sim),
                format!("{:e}", r.truncated_error),
                format!("{:e}", r.seconds),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;

    #[test]
    fn scalar_matrix() {
        let m = gen_matrix(&SpectrumSpec::explicit(vec![1.0], 1, 1)).unwrap();
        assert!((m.get(0, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_spectrum_recovered() {
        let spec = SpectrumSpec::log_spaced(1e-6, 1.0, 32, 32).with_seed(3);
        let m = gen_matrix(&spec).unwrap();
        let want = spec.singular_values().unwrap();
        let got = singular_values(&m).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
        assert!((want[31] - 1e-6).abs() < 1e-20);
    }

    #[test]
    fn rectangular_power_law() {
        let spec = SpectrumSpec {
            kind: SpectrumKind::PowerLaw { exponent: 2.0 },
            rows: 20,
            cols: 6,
            seed: 9,
        };
        let m = gen_matrix(&spec).unwrap();
        assert_eq!(m.shape(), (20, 6));
        let got = singular_values(&m).unwrap();
        for (j, g) in got.iter().enumerate() {
            assert!((g - ((j + 1) as f64).powi(-2)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let spec = SpectrumSpec::log_spaced(1e-3, 1.0, 10, 7).with_seed(42);
        assert_eq!(gen_matrix(&spec).unwrap(), gen_matrix(&spec).unwrap());
        let other = gen_matrix(&spec.clone().with_seed(43)).unwrap();
        assert_ne!(gen_matrix(&spec).unwrap(), other);
    }

    #[test]
    fn spec_strings() {
        let s: SpectrumSpec = "log:1e-6:1:32".parse().unwrap();
        assert_eq!(s, SpectrumSpec::log_spaced(1e-6, 1.0, 32, 32));
        let s: SpectrumSpec = "log:1e-3:1:64x16".parse().unwrap();
        assert_eq!((s.rows, s.cols), (64, 16));
        let s: SpectrumSpec = "pow:5:32".parse().unwrap();
        assert_eq!(s.kind, SpectrumKind::PowerLaw { exponent: 5.0 });
        let s: SpectrumSpec = "list:1,0.5:3x2".parse().unwrap();
        assert_eq!(s.kind, SpectrumKind::Explicit(vec![1.0, 0.5]));
        assert!(matches!(
            "file:/tmp/x.pxm".parse::<SpectrumSpec>().unwrap().kind,
            SpectrumKind::File(_)
        ));
        for bad in ["log:1:2", "pow:x:3", "list:1,0:2", "list:1,2,3:2x2", "log:2:1:4", "nope:1"] {
            assert!(bad.parse::<SpectrumSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn method_resolution() {
        let r = BaselineRegistry::default();
        assert_eq!(resolve_method("ns5", 5, &r).unwrap().polys.len(), 1);
        assert_eq!(resolve_method("polarexpress:1e-6", 12, &r).unwrap().polys.len(), 12);
        assert_eq!(resolve_method("polarexpress3", 4, &r).unwrap().polys[0].degree(), 3);
        match resolve_method("you", 5, &r) {
            Err(Error::UnknownMethod { available, .. }) => {
                assert!(available.iter().any(|a| a.starts_with("polarexpress")))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn orthogonal_input_never_gets_worse() {
        let m = gen_matrix(&SpectrumSpec::explicit(vec![1.0; 8], 8, 8).with_seed(5)).unwrap();
        let r = BaselineRegistry::default();
        let methods = [resolve_method("ns5", 10, &r).unwrap()];
        let opts = BenchOptions {
            steps: 10,
            ..Default::default()
        };
        let rep = &run_convergence(&m, &methods, &opts).unwrap()[0];
        assert_eq!(rep.records.len(), 11);
        // X0 = Q / (sqrt(8) + 0.01), all singular values equal
        let e0 = 1.0 - 1.0 / (8f64.sqrt() + 0.01);
        assert!((rep.records[0].spectral_error - e0).abs() < 1e-12);
        for w in rep.records.windows(2) {
            assert!(w[1].spectral_error <= w[0].spectral_error + 1e-15);
        }
    }

    #[test]
    fn csv_layout_and_parallel_determinism() {
        let m = gen_matrix(&SpectrumSpec::log_spaced(1e-3, 1.0, 12, 8).with_seed(1)).unwrap();
        let r = BaselineRegistry::default();
        let methods: Vec<Method> = ["polarexpress", "ns5", "jordan"]
            .iter()
            .map(|n| resolve_method(n, 6, &r).unwrap())
            .collect();
        let seq = BenchOptions {
            steps: 6,
            timing: false,
            ..Default::default()
        };
        let par = BenchOptions {
            parallel: true,
            ..seq
        };
        let a = run_convergence(&m, &methods, &seq).unwrap();
        let b = run_convergence(&m, &methods, &par).unwrap();
        assert_eq!(a, b);

        let mut buf = Vec::new();
        write_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "method,iter,spectral_error,frob_error,cosine_sim,truncated_error,seconds"
        );
        assert_eq!(lines.len(), 1 + 3 * 7);
        assert!(lines[1].starts_with("polarexpress,0,"));
    }
}
