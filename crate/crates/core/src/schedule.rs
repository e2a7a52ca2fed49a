//! Offline synthesis of polynomial schedules.
//!
//! A schedule is built greedily: each step solves the minimax problem on the
//! current interval `[lo, hi]`, and the next interval is the image
//! `[p(lo), 2 - p(lo)]`. Two finite-precision modifications are layered on
//! top: a cushion that keeps the lower endpoint used for synthesis at least a
//! fixed fraction of `hi`, and a safety factor `s` that replaces `p(x)` with
//! `p(x / s)` in the stored (runtime) coefficients.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::minimax::{optimal_cubic, remez_quintic};
use crate::poly::OddPolynomial;

/// Cushion constant used to generate the reference degree-5 table (l = 1e-3, T = 8).
pub const DEFAULT_CUSHION: f64 = 0.02407327424182761;
pub const DEFAULT_SAFETY: f64 = 1.01;
pub const DEFAULT_L_INIT: f64 = 1e-3;
pub const SCHEDULE_FILE_VERSION: u32 = 1;

/// Once `|1 - lo|` drops below this the Padé polynomial is reused verbatim.
const FIXED_POINT_TOL: f64 = 8.0 / (1u64 << 53) as f64;

/// Tracked singular-value range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(domain(format!("interval needs 0 < lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub l_init: f64,
    pub cushion: f64,
    pub safety: f64,
    pub safety_on_last: bool,
}

/// Precomputed polynomials with their interval trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    polys: Vec<OddPolynomial>,
    pre_safety: Vec<OddPolynomial>,
    intervals: Vec<Interval>,
    params: ScheduleParams,
}

impl Schedule {
    /// Runtime polynomials, safety factor included.
    pub fn polys(&self) -> &[OddPolynomial] {
        &self.polys
    }

    /// The greedy minimax polynomials before the safety factor.
    pub fn pre_safety_polys(&self) -> &[OddPolynomial] {
        &self.pre_safety
    }

    /// `T + 1` intervals; `intervals()[t]` is the range fed to step `t`.
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn params(&self) -> &ScheduleParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Largest step degree (all steps share it unless built with mixed degrees).
    pub fn degree(&self) -> usize {
        self.polys.iter().map(OddPolynomial::degree).max().unwrap_or(0)
    }

    /// `max |1 - p(x)|` over `[l_init, 1]` for the pre-safety composition.
    pub fn certified_error(&self) -> f64 {
        certified_error(self)
    }

    pub fn scalar_compose(&self, x: f64) -> f64 {
        scalar_compose(self, x)
    }

    /// Runtime polynomial for step `t`, repeating the last one past the end.
    pub fn step_poly(&self, t: usize) -> &OddPolynomial {
        &self.polys[t.min(self.polys.len() - 1)]
    }
}

/// `1 - lo` of the final interval.
pub fn certified_error(s: &Schedule) -> f64 {
    1.0 - s.intervals.last().expect("schedule has at least one interval").lo
}

/// Apply the pre-safety polynomials in order to a scalar.
pub fn scalar_compose(s: &Schedule, x: f64) -> f64 {
    s.pre_safety.iter().fold(x, |x, p| p.eval(x))
}

/// Builder for [`Schedule`]; defaults reproduce the reference degree-5 table (l = 1e-3, T = 8).
#[derive(Debug, Clone)]
pub struct ScheduleBuilder {
    l_init: f64,
    steps: usize,
    degrees: Option<Vec<usize>>,
    degree: usize,
    cushion: f64,
    safety: f64,
    safety_on_last: bool,
}

impl ScheduleBuilder {
    pub fn new(l_init: f64) -> Self {
        Self {
            l_init,
            steps: 8,
            degrees: None,
            degree: 5,
            cushion: DEFAULT_CUSHION,
            safety: DEFAULT_SAFETY,
            safety_on_last: false,
        }
    }

    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    /// Per-step degrees; overrides `steps` and `degree`.
    pub fn degrees(mut self, degrees: Vec<usize>) -> Self {
        self.degrees = Some(degrees);
        self
    }

    pub fn cushion(mut self, cushion: f64) -> Self {
        self.cushion = cushion;
        self
    }

    pub fn safety(mut self, safety: f64) -> Self {
        self.safety = safety;
        self
    }

    pub fn safety_on_last(mut self, on: bool) -> Self {
        self.safety_on_last = on;
        self
    }

    pub fn build(self) -> Result<Schedule> {
        let Self {
            l_init,
            steps,
            degrees,
            degree,
            cushion,
            safety,
            safety_on_last,
        } = self;
        if !(l_init > 0.0 && l_init <= 1.0) {
            return Err(domain(format!("l_init must lie in (0, 1], got {l_init}")));
        }
        if !(0.0..1.0).contains(&cushion) {
            return Err(domain(format!("cushion must lie in [0, 1), got {cushion}")));
        }
        if !(safety >= 1.0 && safety.is_finite()) {
            return Err(domain(format!("safety must be >= 1, got {safety}")));
        }
        let degrees = degrees.unwrap_or_else(|| vec![degree; steps]);
        if let Some(d) = degrees.iter().find(|&&d| d != 3 && d != 5) {
            return Err(domain(format!("supported degrees are 3 and 5, got {d}")));
        }

        let mut lo = l_init;
        let mut hi = 1.0;
        let mut intervals = vec![Interval { lo, hi }];
        let mut pre_safety = Vec::with_capacity(degrees.len());
        for &d in &degrees {
            let p = if (1.0 - lo).abs() < FIXED_POINT_TOL {
                OddPolynomial::pade(d)?
            } else {
                let synth_lo = lo.max(cushion * hi);
                let p = match d {
                    3 => optimal_cubic(synth_lo, hi)?,
                    _ => remez_quintic(synth_lo, hi)?.poly,
                };
                if synth_lo > lo {
                    // re-level so that 1 - p(lo) = p(hi) - 1 on the true interval
                    p.scaled(2.0 / (p.eval(lo) + p.eval(hi)))
                } else {
                    p
                }
            };
            // rounding can overshoot the fixed point by an ulp
            lo = p.eval(lo).min(1.0);
            hi = 2.0 - lo;
            intervals.push(Interval { lo, hi });
            pre_safety.push(p);
        }

        let last = pre_safety.len().saturating_sub(1);
        let polys = pre_safety
            .iter()
            .enumerate()
            .map(|(t, p)| {
                if t < last || safety_on_last {
                    p.with_input_scale(safety)
                } else {
                    p.clone()
                }
            })
            .collect();

        Ok(Schedule {
            polys,
            pre_safety,
            intervals,
            params: ScheduleParams {
                l_init,
                cushion,
                safety,
                safety_on_last,
            },
        })
    }
}

/// Greedy schedule of `steps` polynomials of a single degree.
pub fn build_schedule(
    l_init: f64,
    steps: usize,
    degree: usize,
    cushion: f64,
    safety: f64,
) -> Result<Schedule> {
    ScheduleBuilder::new(l_init)
        .steps(steps)
        .degree(degree)
        .cushion(cushion)
        .safety(safety)
        .build()
}

/// The degree-5 runtime list for `l = 1e-3`, eight steps, safety 1.01.
pub fn default_schedule() -> Schedule {
    ScheduleBuilder::new(DEFAULT_L_INIT)
        .build()
        .expect("default schedule parameters are valid")
}

// ---------------------------------------------------------------------------
// file format

/// A number written with 17 significant digits.
struct Sig17(f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite number in schedule"));
        }
        let raw = serde_json::value::RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct ScheduleFileOut {
    version: u32,
    degree: usize,
    l_init: Sig17,
    cushion: Sig17,
    safety: Sig17,
    safety_on_last: bool,
    polys: Vec<Vec<Sig17>>,
    pre_safety_polys: Vec<Vec<Sig17>>,
    intervals: Vec<[Sig17; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFileIn {
    version: u32,
    #[serde(default)]
    degree: Option<usize>,
    l_init: f64,
    #[serde(default)]
    cushion: f64,
    #[serde(default = "one")]
    safety: f64,
    #[serde(default)]
    safety_on_last: bool,
    polys: Vec<Vec<f64>>,
    #[serde(default)]
    pre_safety_polys: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    intervals: Option<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

fn sig_vec(p: &OddPolynomial) -> Vec<Sig17> {
    p.coeffs().iter().copied().map(Sig17).collect()
}

impl Schedule {
    /// JSON text with every real written to 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let out = ScheduleFileOut {
            version: SCHEDULE_FILE_VERSION,
            degree: self.degree(),
            l_init: Sig17(self.params.l_init),
            cushion: Sig17(self.params.cushion),
            safety: Sig17(self.params.safety),
            safety_on_last: self.params.safety_on_last,
            polys: self.polys.iter().map(sig_vec).collect(),
            pre_safety_polys: self.pre_safety.iter().map(sig_vec).collect(),
            intervals: self
                .intervals
                .iter()
                .map(|iv| [Sig17(iv.lo), Sig17(iv.hi)])
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&out)?)
    }

    /// Parse a schedule file.
    ///
    /// `pre_safety_polys` and `intervals` may be omitted; they are then
    /// recovered by undoing the safety factor and replaying the recurrence.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScheduleFileIn = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if f.version != SCHEDULE_FILE_VERSION {
            return Err(Error::InvalidSchedule(format!(
                "unsupported version {}",
                f.version
            )));
        }
        if !(f.safety >= 1.0) {
            return Err(Error::InvalidSchedule(format!("safety {} < 1", f.safety)));
        }
        let to_polys = |field: &str, v: Vec<Vec<f64>>| -> Result<Vec<OddPolynomial>> {
            v.into_iter()
                .enumerate()
                .map(|(i, c)| {
                    if c.is_empty() || c.len() > 3 || c.iter().any(|x| !x.is_finite()) {
                        Err(Error::InvalidSchedule(format!(
                            "{field}[{i}]: expected 1 to 3 finite coefficients"
                        )))
                    } else {
                        OddPolynomial::new(c)
                    }
                })
                .collect()
        };
        let polys = to_polys("polys", f.polys)?;
        if polys.is_empty() {
            return Err(Error::InvalidSchedule("polys is empty".into()));
        }
        let last = polys.len() - 1;
        let pre_safety = match f.pre_safety_polys {
            Some(v) => to_polys("pre_safety_polys", v)?,
            None => polys
                .iter()
                .enumerate()
                .map(|(t, p)| {
                    if t < last || f.safety_on_last {
                        p.with_input_scale(1.0 / f.safety)
                    } else {
                        p.clone()
                    }
                })
                .collect(),
        };
        if pre_safety.len() != polys.len() {
            return Err(Error::InvalidSchedule(format!(
                "pre_safety_polys has {} entries but polys has {}",
                pre_safety.len(),
                polys.len()
            )));
        }
        if let Some(d) = f.degree {
            if let Some((i, p)) = polys.iter().enumerate().find(|(_, p)| p.degree() > d) {
                return Err(Error::InvalidSchedule(format!(
                    "polys[{i}] has degree {} above declared degree {d}",
                    p.degree()
                )));
            }
        }
        let intervals = match f.intervals {
            Some(v) => {
                if v.len() != polys.len() + 1 {
                    return Err(Error::InvalidSchedule(format!(
                        "intervals has {} entries, expected len(polys) + 1 = {}",
                        v.len(),
                        polys.len() + 1
                    )));
                }
                v.into_iter()
                    .enumerate()
                    .map(|(i, [lo, hi])| {
                        Interval::new(lo, hi)
                            .map_err(|e| Error::InvalidSchedule(format!("intervals[{i}]: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => {
                let mut lo = f.l_init;
                let mut out = vec![Interval { lo, hi: 1.0 }];
                for p in &pre_safety {
                    lo = p.eval(lo).min(1.0);
                    out.push(Interval { lo, hi: 2.0 - lo });
                }
                out
            }
        };
        if intervals[0].lo != f.l_init {
            return Err(Error::InvalidSchedule(format!(
                "intervals[0].lo = {} differs from l_init = {}",
                intervals[0].lo, f.l_init
            )));
        }
        Ok(Schedule {
            polys,
            pre_safety,
            intervals,
            params: ScheduleParams {
                l_init: f.l_init,
                cushion: f.cushion,
                safety: f.safety,
                safety_on_last: f.safety_on_last,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
