//! Dense row-major matrices with an element-precision tag.
//!
//! Storage is always `f64`; the tag decides how results are rounded. Every
//! matrix product is accumulated in binary64 and its final entries rounded,
//! and every elementwise combination is rounded after it is formed.

use std::cell::Cell;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};

/// Element precision of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
    /// bfloat16 emulated by round-to-nearest-even to an 8-bit significand.
    Bf16,
}

impl Precision {
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::F64 => x,
            Precision::F32 => x as f32 as f64,
            Precision::Bf16 => half::bf16::from_f64(x).to_f64(),
        }
    }

    /// Unit roundoff of the format.
    pub fn unit_roundoff(self) -> f64 {
        match self {
            Precision::F64 => f64::EPSILON / 2.0,
            Precision::F32 => f32::EPSILON as f64 / 2.0,
            Precision::Bf16 => 2f64.powi(-8) / 2.0,
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f64" | "binary64" | "float64" | "double" => Ok(Precision::F64),
            "f32" | "binary32" | "float32" | "single" => Ok(Precision::F32),
            "bf16" | "bfloat16" => Ok(Precision::Bf16),
            other => Err(domain(format!("unknown precision `{other}`"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
            Precision::Bf16 => "bf16",
        })
    }
}

thread_local! {
    static MULADDS: Cell<u64> = const { Cell::new(0) };
}

/// Run `f` and return its result with the number of scalar multiply-adds
/// spent in matrix products on this thread (an `m x k` by `k x n` product
/// counts `m k n`).
pub fn count_muladds<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = MULADDS.with(Cell::get);
    let out = f();
    (out, MULADDS.with(Cell::get) - before)
}

/// Products smaller than this run on one thread.
const PAR_THRESHOLD: usize = 1 << 18;

#[derive(Clone, PartialEq)]
pub struct MatrixBuffer {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    precision: Precision,
}

impl fmt::Debug for MatrixBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixBuffer<{}x{} {}>", self.rows, self.cols, self.precision)?;
        if self.data.len() <= 64 {
            for r in 0..self.rows {
                write!(f, "\n  {:?}", self.row(r))?;
            }
        }
        Ok(())
    }
}

impl MatrixBuffer {
    /// Build from row-major data; entries are rounded to `precision`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, precision: Precision) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("construction (entry {i})"),
            });
        }
        let mut m = Self {
            rows,
            cols,
            data,
            precision,
        };
        m.round_in_place();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), Precision::F64)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::raw(rows, cols, data, Precision::F64)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::raw(rows, cols, vec![0.0; rows * cols], Precision::F64)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// No validation, no rounding.
    pub(crate) fn raw(rows: usize, cols: usize, data: Vec<f64>, precision: Precision) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data,
            precision,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn round_in_place(&mut self) {
        let p = self.precision;
        if p != Precision::F64 {
            self.data.iter_mut().for_each(|x| *x = p.round(*x));
        }
    }

    /// Same values re-rounded to another precision.
    pub fn to_precision(&self, precision: Precision) -> Self {
        let mut m = self.clone();
        m.precision = precision;
        m.round_in_place();
        m
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows, self.cols);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Self::raw(c, r, data, self.precision)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let p = self.precision;
        let data = self.data.iter().map(|x| p.round(x * s)).collect();
        Self::raw(self.rows, self.cols, data, p)
    }

    /// `alpha * self + beta * other`, rounded once.
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "cannot combine {:?} with {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let p = self.precision;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| p.round(alpha * a + beta * b))
            .collect();
        Ok(Self::raw(self.rows, self.cols, data, p))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// `self + s * I` for square matrices.
    pub fn add_identity(&self, s: f64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Shape(format!("add_identity on {}x{}", self.rows, self.cols)));
        }
        let mut out = self.clone();
        let p = self.precision;
        for i in 0..self.rows {
            let v = &mut out.data[i * self.cols + i];
            *v = p.round(*v + s);
        }
        Ok(out)
    }

    /// Matrix product, accumulated in binary64 and rounded to `self`'s precision.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        MULADDS.with(|c| c.set(c.get() + (m * k * n) as u64));
        let p = self.precision;
        let mut out = vec![0.0; m * n];
        let row_kernel = |(i, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (kk, &a) in a_row.iter().enumerate() {
                let b_row = &rhs.data[kk * n..(kk + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
            if p != Precision::F64 {
                out_row.iter_mut().for_each(|x| *x = p.round(*x));
            }
        };
        // each row is computed identically on any thread, so results do not
        // depend on the thread count
        if m * k * n >= PAR_THRESHOLD {
            out.par_chunks_mut(n).enumerate().for_each(row_kernel);
        } else {
            out.chunks_mut(n).enumerate().for_each(row_kernel);
        }
        Ok(Self::raw(m, n, out, p))
    }

    /// `self^T self`.
    pub fn gram(&self) -> Self {
        self.transpose()
            .matmul(self)
            .expect("gram shapes always agree")
    }

    /// `self self^T`.
    pub fn outer_gram(&self) -> Self {
        self.matmul(&self.transpose())
            .expect("gram shapes always agree")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    // -----------------------------------------------------------------------
    // PXM1 / CSV

    /// Write the `PXM1` text format with 17 significant digits per entry.
    pub fn write_pxm1<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "PXM1 {} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Read either `PXM1` or headerless CSV (rows inferred from lines).
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let lines: Vec<(usize, String)> = r
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .collect::<std::io::Result<_>>()?;
        let mut lines = lines
            .into_iter()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let Some((first_no, first)) = lines.peek().cloned() else {
            return Err(Error::Parse {
                line: 1,
                message: "empty matrix file".into(),
            });
        };
        let parse = |line: usize, tok: &str| -> Result<f64> {
            tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("bad number `{tok}`: {e}"),
            })
        };

        if first.trim_start().starts_with("PXM1") {
            lines.next();
            let header: Vec<&str> = first.split_whitespace().collect();
            let dims = |i: usize| -> Result<usize> {
                header
                    .get(i)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: first_no,
                        message: "header must read `PXM1 <rows> <cols>`".into(),
                    })
            };
            let (rows, cols) = (dims(1)?, dims(2)?);
            let mut data = Vec::with_capacity(rows * cols);
            let mut last_line = first_no;
            for (no, l) in lines {
                last_line = no;
                for tok in l.split_whitespace() {
                    data.push(parse(no, tok)?);
                }
            }
            if data.len() != rows * cols {
                return Err(Error::Parse {
                    line: last_line,
                    message: format!("expected {} entries, found {}", rows * cols, data.len()),
                });
            }
            Self::new(rows, cols, data, Precision::F64)
        } else {
            let mut data = Vec::new();
            let mut cols = None;
            let mut rows = 0;
            for (no, l) in lines {
                let vals = l.split(',').map(|t| parse(no, t)).collect::<Result<Vec<_>>>()?;
                match cols {
                    None => cols = Some(vals.len()),
                    Some(c) if c != vals.len() => {
                        return Err(Error::Parse {
                            line: no,
                            message: format!("expected {c} fields, found {}", vals.len()),
                        })
                    }
                    _ => {}
                }
                data.extend(vals);
                rows += 1;
            }
            Self::new(rows, cols.unwrap_or(0), data, Precision::F64)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_pxm1(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
