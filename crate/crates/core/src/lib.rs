//! Polar factors of rectangular matrices by compositions of odd polynomials.
//!
//! The work splits into an offline stage and an online stage:
//!
//! * [`minimax`] solves the one-step problem `min_p max_{[l,u]} |1 - p(x)|`
//!   over odd cubics (closed form) and quintics (four-point exchange), and
//!   certifies solutions by equioscillation.
//! * [`schedule`] chains those solutions greedily into a [`Schedule`] whose
//!   interval trace certifies the worst-case error of the whole composition,
//!   with a cushion and a safety factor for low-precision use.
//! * [`engine`] applies schedules (or fixed baseline iterations) to matrices
//!   through Gram-matrix Horner steps, optionally in emulated `bfloat16`.
//! * [`accel`] holds the two-product scheme for tall matrices and the
//!   spectrum-aware first step.
//! * [`metrics`], [`linalg`] and [`bench`] provide the SVD reference, error
//!   measures and synthetic experiments.
//!
//! ```
//! use polar_express::{apply_schedule, default_schedule, exact_polar, MatrixBuffer, Precision};
//!
//! let m = MatrixBuffer::from_rows(&[vec![3.0, 1.0], vec![0.5, 2.0], vec![0.0, 1.0]])?;
//! let x = apply_schedule(&m, &default_schedule(), 10, Precision::F64)?;
//! let err = exact_polar(&m)?.max_abs_diff(&x);
//! assert!(err < 1e-4);
//! # Ok::<(), polar_express::Error>(())
//! ```

pub mod accel;
pub mod bench;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod minimax;
pub mod poly;
pub mod schedule;

pub use accel::{
    fast_apply, power_lower_bound, should_use_fast, spectrum_aware_init, FastApplyConfig,
    PowerEstimate,
};
pub use bench::{gen_matrix, run_convergence, ConvergenceReport, SpectrumSpec};
pub use engine::{
    apply_polys, apply_schedule, normalize, poly_step, ApplyOptions, BaselineRegistry, FastMode,
    Normalization,
};
pub use error::{Error, Result};
pub use linalg::exact_polar;
pub use matrix::{MatrixBuffer, Precision};
pub use metrics::{metrics, Metrics, PolarReference};
pub use minimax::{
    optimal_cubic, remez_quintic, verify_equioscillation, EquioscillationCertificate,
    RemezSolution,
};
pub use poly::{eval_poly, OddPolynomial};
pub use schedule::{
    build_schedule, certified_error, default_schedule, scalar_compose, Interval, Schedule,
    ScheduleBuilder,
};
