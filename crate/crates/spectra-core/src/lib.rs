//! Spectral analysis of 2π-periodic ordinary differential operators whose
//! coefficients are analytic on a strip around the real axis.
//!
//! The crate represents elements of the strip Hardy space by truncated
//! Fourier series and provides:
//!
//! * [`hardy`] — the weighted-coefficient Hilbert space: norms, inner
//!   products, point evaluation, and the reproducing kernel;
//! * [`operator`] — order-≤2 periodic operators with matrix coefficients,
//!   their structural checks (regularity, sectoriality, self-adjointness);
//! * [`galerkin`] — dense spectral discretization in the exponential bases
//!   of L²_per and H², eigenvalue/eigenfunction extraction, growth fits;
//! * [`monodromy`] — an independent eigenvalue oracle built on transfer
//!   matrices of the first-order system, Floquet determinants, and an
//!   argument-principle eigenvalue search;
//! * [`completeness`] — conformal change of variables, collision searches
//!   for points not separated by eigenfunctions, and span-residual tables;
//! * [`semigroup`] — eigenfunction-expansion evolution with continuity and
//!   contraction probes.

pub mod completeness;
pub mod error;
pub mod galerkin;
pub mod hardy;
pub mod linalg;
pub mod monodromy;
pub mod numeric;
pub mod operator;
pub mod semigroup;

pub use error::{Result, SpectraError};
pub use hardy::{HardyFunction, KernelElement, StripDomain, VectorHardyFunction};
pub use operator::{CoefficientMatrix, OperatorForm, PeriodicOperator};
