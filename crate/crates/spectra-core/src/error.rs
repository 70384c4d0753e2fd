//! Error type shared by every module of the crate.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid strip half-height T = {0}; T must be positive and finite")]
    InvalidStripHeight(f64),

    #[error("cosh(2nT) overflows for n = {n}, T = {t}; reduce the truncation order or the strip height")]
    WeightOverflow { n: i64, t: f64 },

    #[error("strip domains differ: T = {0} vs T = {1}")]
    DomainMismatch(f64, f64),

    #[error("point z = {z} lies outside the strip |Im z| < {t}")]
    OutsideStrip { z: Complex64, t: f64 },

    #[error("need at least {needed} uniform samples for truncation order {n_trunc}, got {got}")]
    InsufficientSamples {
        needed: usize,
        got: usize,
        n_trunc: usize,
    },

    #[error("coefficient list must have odd length 2N+1, got {0}")]
    BadCoefficientCount(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix of size {0} exceeds the configured cap {1}")]
    SizeCap(usize, usize),

    #[error("dense eigensolver failed: {0}")]
    EigFailure(String),

    #[error("leading coefficient is singular near z = {z} (|det| = {det:e})")]
    SingularLeading { z: Complex64, det: f64 },

    #[error("matrix spectrum touches the branch cut (-inf, 0] near z = {z}")]
    BranchCut { z: Complex64 },

    #[error("integration step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("lambda = {lambda} lies within tolerance of an eigenvalue: |det(I - U(2pi))| = {det:e}")]
    NearEigenvalue { lambda: Complex64, det: f64 },

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("coefficient function vanishes on the integration path near z = {z}")]
    ZeroOnPath { z: Complex64 },

    #[error("{0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, SpectraError>;
