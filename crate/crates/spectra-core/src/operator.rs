//! Periodic differential operators of order one or two with matrix-valued
//! coefficients analytic on the strip, together with the structural checks
//! used before any spectral computation: regularity of the leading
//! coefficient, a positivity (sectoriality) estimate, and the self-adjoint
//! defect of the discretized operator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};
use crate::hardy::{HardyFunction, StripDomain, VectorHardyFunction};
use crate::linalg;

/// K×K grid of scalar Hardy functions sharing one strip domain.
#[derive(Clone, Debug)]
pub struct CoefficientMatrix {
    k: usize,
    domain: StripDomain,
    /// Row-major entries.
    entries: Vec<HardyFunction>,
}

impl CoefficientMatrix {
    pub fn new(rows: Vec<Vec<HardyFunction>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(SpectraError::Validation("empty coefficient matrix".into()));
        }
        let domain = rows[0][0].domain();
        let mut entries = Vec::with_capacity(k * k);
        for row in rows {
            if row.len() != k {
                return Err(SpectraError::DimensionMismatch(row.len(), k));
            }
            for f in row {
                if f.domain() != domain {
                    return Err(SpectraError::DomainMismatch(
                        domain.half_height(),
                        f.domain().half_height(),
                    ));
                }
                entries.push(f);
            }
        }
        Ok(Self { k, domain, entries })
    }

    pub fn scalar(f: HardyFunction) -> Self {
        Self {
            k: 1,
            domain: f.domain(),
            entries: vec![f],
        }
    }

    pub fn identity(domain: StripDomain, n_trunc: usize, k: usize) -> Result<Self> {
        let one = HardyFunction::constant(domain, n_trunc, Complex64::new(1.0, 0.0))?;
        let zero = HardyFunction::zero(domain, n_trunc)?;
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                entries.push(if i == j { one.clone() } else { zero.clone() });
            }
        }
        Ok(Self { k, domain, entries })
    }

    pub fn zero(domain: StripDomain, n_trunc: usize, k: usize) -> Result<Self> {
        let z = HardyFunction::zero(domain, n_trunc)?;
        Ok(Self {
            k,
            domain,
            entries: vec![z; k * k],
        })
    }

    /// Constant matrix coefficient.
    pub fn constant(domain: StripDomain, n_trunc: usize, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(SpectraError::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let k = m.nrows();
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                entries.push(HardyFunction::constant(domain, n_trunc, m[(i, j)])?);
            }
        }
        Ok(Self { k, domain, entries })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn domain(&self) -> StripDomain {
        self.domain
    }

    pub fn entry(&self, i: usize, j: usize) -> &HardyFunction {
        &self.entries[i * self.k + j]
    }

    pub fn n_trunc(&self) -> usize {
        self.entries.iter().map(|f| f.n_trunc()).max().unwrap()
    }

    /// Largest mode index carrying a nonzero coefficient in any entry.
    pub fn max_degree(&self) -> usize {
        let mut deg = 0usize;
        for f in &self.entries {
            let nt = f.n_trunc() as i64;
            for n in -nt..=nt {
                if f.coeff(n).norm_sqr() > 0.0 {
                    deg = deg.max(n.unsigned_abs() as usize);
                }
            }
        }
        deg
    }

    /// Pointwise value on the closed strip.
    pub fn evaluate(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let mut m = DMatrix::from_element(self.k, self.k, Complex64::new(0.0, 0.0));
        for i in 0..self.k {
            for j in 0..self.k {
                m[(i, j)] = self.entry(i, j).evaluate_closed(z)?;
            }
        }
        Ok(m)
    }

    /// Matrix of d-th Fourier coefficients of the entries.
    pub fn fourier_matrix(&self, d: i64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.k, self.k, |i, j| self.entry(i, j).coeff(d))
    }

    pub fn derivative(&self) -> CoefficientMatrix {
        CoefficientMatrix {
            k: self.k,
            domain: self.domain,
            entries: self.entries.iter().map(|f| f.derivative()).collect(),
        }
    }

    pub fn neg(&self) -> CoefficientMatrix {
        CoefficientMatrix {
            k: self.k,
            domain: self.domain,
            entries: self
                .entries
                .iter()
                .map(|f| f.scaled(Complex64::new(-1.0, 0.0)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &CoefficientMatrix) -> Result<CoefficientMatrix> {
        if self.k != other.k {
            return Err(SpectraError::DimensionMismatch(self.k, other.k));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(CoefficientMatrix {
            k: self.k,
            domain: self.domain,
            entries,
        })
    }

    /// Matrix-vector action with full convolution bands (no re-truncation).
    fn apply_full(&self, f: &[HardyFunction]) -> Result<Vec<HardyFunction>> {
        if f.len() != self.k {
            return Err(SpectraError::DimensionMismatch(f.len(), self.k));
        }
        let mut out = Vec::with_capacity(self.k);
        for i in 0..self.k {
            let mut acc: Option<HardyFunction> = None;
            for (j, fj) in f.iter().enumerate() {
                let term = self.entry(i, j).product_full(fj)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term)?,
                });
            }
            out.push(acc.unwrap());
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorForm {
    /// A₂ D² + A₁ D + A₀ (A₂ absent for first order).
    Standard,
    /// −D P₂ D + P₁ D + P₀.
    Divergence,
}

/// An order-≤2 periodic differential operator.
#[derive(Clone, Debug)]
pub struct PeriodicOperator {
    form: OperatorForm,
    k: usize,
    domain: StripDomain,
    /// A₂ (standard) or P₂ (divergence); absent for first-order operators.
    second: Option<CoefficientMatrix>,
    first: CoefficientMatrix,
    zeroth: CoefficientMatrix,
}

pub struct ApplyOutput {
    pub value: VectorHardyFunction,
    /// Weighted norm of the convolution modes discarded by re-truncation.
    pub discarded_tail: f64,
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub min_abs_det: f64,
    pub argmin: Complex64,
    pub floor: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SectorialityReport {
    /// Minimum over the grid of the smallest eigenvalue of the Hermitian
    /// part of the leading coefficient.
    pub c0: f64,
    pub argmin: Complex64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SelfAdjointReport {
    /// ‖M − M*‖_F / ‖M‖_F for the L²-basis discretization M.
    pub defect: f64,
    /// Smallest eigenvalue of the Hermitian part of M.
    pub min_rayleigh: f64,
}

impl PeriodicOperator {
    pub fn new_standard(
        a2: Option<CoefficientMatrix>,
        a1: CoefficientMatrix,
        a0: CoefficientMatrix,
    ) -> Result<Self> {
        Self::build(OperatorForm::Standard, a2, a1, a0)
    }

    pub fn new_divergence(
        p2: CoefficientMatrix,
        p1: CoefficientMatrix,
        p0: CoefficientMatrix,
    ) -> Result<Self> {
        Self::build(OperatorForm::Divergence, Some(p2), p1, p0)
    }

    fn build(
        form: OperatorForm,
        second: Option<CoefficientMatrix>,
        first: CoefficientMatrix,
        zeroth: CoefficientMatrix,
    ) -> Result<Self> {
        let k = first.k();
        let domain = first.domain();
        if zeroth.k() != k {
            return Err(SpectraError::DimensionMismatch(zeroth.k(), k));
        }
        if zeroth.domain() != domain {
            return Err(SpectraError::DomainMismatch(
                domain.half_height(),
                zeroth.domain().half_height(),
            ));
        }
        if let Some(s) = &second {
            if s.k() != k {
                return Err(SpectraError::DimensionMismatch(s.k(), k));
            }
            if s.domain() != domain {
                return Err(SpectraError::DomainMismatch(
                    domain.half_height(),
                    s.domain().half_height(),
                ));
            }
        }
        Ok(Self {
            form,
            k,
            domain,
            second,
            first,
            zeroth,
        })
    }

    pub fn order(&self) -> usize {
        if self.second.is_some() {
            2
        } else {
            1
        }
    }

    pub fn form(&self) -> OperatorForm {
        self.form
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn domain(&self) -> StripDomain {
        self.domain
    }

    pub fn second(&self) -> Option<&CoefficientMatrix> {
        self.second.as_ref()
    }

    pub fn first(&self) -> &CoefficientMatrix {
        &self.first
    }

    pub fn zeroth(&self) -> &CoefficientMatrix {
        &self.zeroth
    }

    /// The coefficient whose determinant must not vanish: P₂ in divergence
    /// form, A₂ in standard form, A₁ for first-order operators.
    pub fn leading(&self) -> &CoefficientMatrix {
        self.second.as_ref().unwrap_or(&self.first)
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = self.first.max_degree().max(self.zeroth.max_degree());
        if let Some(s) = &self.second {
            // The divergence form differentiates P₂ once.
            deg = deg.max(s.max_degree() + usize::from(self.form == OperatorForm::Divergence));
        }
        deg
    }

    /// Rewrite −D P₂ D + P₁ D + P₀ as A₂ D² + A₁ D + A₀ with
    /// A₂ = −P₂, A₁ = P₁ − P₂′, A₀ = P₀. Exact on truncated series.
    pub fn to_standard(&self) -> Result<PeriodicOperator> {
        match (self.form, &self.second) {
            (OperatorForm::Standard, _) => Ok(self.clone()),
            (OperatorForm::Divergence, None) => {
                Self::build(OperatorForm::Standard, None, self.first.clone(), self.zeroth.clone())
            }
            (OperatorForm::Divergence, Some(p2)) => Self::build(
                OperatorForm::Standard,
                Some(p2.neg()),
                self.first.sub(&p2.derivative())?,
                self.zeroth.clone(),
            ),
        }
    }

    /// Rewrite A₂ D² + A₁ D + A₀ as −D P₂ D + P₁ D + P₀ with
    /// P₂ = −A₂, P₁ = A₁ − A₂′, P₀ = A₀.
    pub fn to_divergence(&self) -> Result<PeriodicOperator> {
        match (self.form, &self.second) {
            (OperatorForm::Divergence, _) => Ok(self.clone()),
            (OperatorForm::Standard, None) => Err(SpectraError::Validation(
                "first-order operators have no divergence form".into(),
            )),
            (OperatorForm::Standard, Some(a2)) => Self::build(
                OperatorForm::Divergence,
                Some(a2.neg()),
                self.first.sub(&a2.derivative())?,
                self.zeroth.clone(),
            ),
        }
    }

    /// Apply the operator in coefficient space without re-truncation; the
    /// result lives on the band N_f + max_degree and is exact.
    pub fn apply_exact(&self, f: &VectorHardyFunction) -> Result<VectorHardyFunction> {
        if f.k() != self.k {
            return Err(SpectraError::DimensionMismatch(f.k(), self.k));
        }
        if f.domain() != self.domain {
            return Err(SpectraError::DomainMismatch(
                self.domain.half_height(),
                f.domain().half_height(),
            ));
        }
        let df: Vec<HardyFunction> = f.components().iter().map(|c| c.derivative()).collect();
        let mut total: Vec<HardyFunction> = match (self.form, &self.second) {
            (OperatorForm::Standard, Some(a2)) => {
                let ddf: Vec<HardyFunction> = df.iter().map(|c| c.derivative()).collect();
                a2.apply_full(&ddf)?
            }
            (OperatorForm::Divergence, Some(p2)) => p2
                .apply_full(&df)?
                .into_iter()
                .map(|g| g.derivative().scaled(Complex64::new(-1.0, 0.0)))
                .collect(),
            (_, None) => vec![
                HardyFunction::zero(self.domain, f.n_trunc())?;
                self.k
            ],
        };
        for (acc, term) in total.iter_mut().zip(self.first.apply_full(&df)?) {
            *acc = acc.add(&term)?;
        }
        for (acc, term) in total.iter_mut().zip(self.zeroth.apply_full(f.components())?) {
            *acc = acc.add(&term)?;
        }
        VectorHardyFunction::new(total)
    }

    /// Apply the operator and re-truncate to the truncation order of `f`,
    /// reporting the weighted norm of the discarded modes.
    pub fn apply(&self, f: &VectorHardyFunction) -> Result<ApplyOutput> {
        let full = self.apply_exact(f)?;
        let keep = f.n_trunc();
        let mut tail_sq = 0.0_f64;
        for comp in full.components() {
            let band = comp.n_trunc() as i64;
            for n in (keep as i64 + 1)..=band {
                for s in [n, -n] {
                    let c = comp.coeff(s);
                    if c.norm_sqr() > 0.0 {
                        tail_sq += (2.0 * c.norm().ln() + self.domain.log_weight(s)).exp();
                    }
                }
            }
        }
        Ok(ApplyOutput {
            value: full.truncated(keep),
            discarded_tail: tail_sq.sqrt(),
        })
    }

    /// L²-norm of (L − λ)f computed on the full convolution band.
    pub fn residual_l2(&self, f: &VectorHardyFunction, lambda: Complex64) -> Result<f64> {
        let lf = self.apply_exact(f)?;
        let r = lf.sub(&f.scaled(lambda).truncated(lf.n_trunc()))?;
        Ok(r.l2_norm())
    }

    fn strip_grid(&self, nx: usize, ny: usize) -> Vec<Complex64> {
        let t = self.domain.half_height();
        let mut pts = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let tau = if ny == 1 {
                0.0
            } else {
                -t + 2.0 * t * j as f64 / (ny - 1) as f64
            };
            for i in 0..nx {
                let x = 2.0 * std::f64::consts::PI * i as f64 / nx as f64;
                pts.push(Complex64::new(x, tau));
            }
        }
        pts
    }

    /// Sample |det leading(z)| on a grid over the closed fundamental strip;
    /// PASS when the minimum stays above `floor`.
    pub fn regularity_check(&self, nx: usize, ny: usize, floor: f64) -> Result<RegularityReport> {
        let lead = self.leading();
        let mut min_abs_det = f64::INFINITY;
        let mut argmin = Complex64::new(0.0, 0.0);
        for z in self.strip_grid(nx, ny) {
            let d = lead.evaluate(z)?.determinant().norm();
            if d < min_abs_det {
                min_abs_det = d;
                argmin = z;
            }
        }
        Ok(RegularityReport {
            min_abs_det,
            argmin,
            floor,
            pass: min_abs_det > floor,
        })
    }

    /// Estimate C₀ = min over the grid of the smallest eigenvalue of the
    /// Hermitian part of P₂(z); `real_axis_only` restricts the grid to the
    /// real line. Requires the divergence form.
    pub fn sectoriality_check(
        &self,
        nx: usize,
        ny: usize,
        real_axis_only: bool,
    ) -> Result<SectorialityReport> {
        if self.form != OperatorForm::Divergence {
            return Err(SpectraError::Validation(
                "sectoriality check applies to divergence-form operators".into(),
            ));
        }
        let p2 = self
            .second
            .as_ref()
            .ok_or_else(|| SpectraError::Validation("missing leading coefficient".into()))?;
        let grid = if real_axis_only {
            self.strip_grid(nx, 1)
        } else {
            self.strip_grid(nx, ny)
        };
        let mut c0 = f64::INFINITY;
        let mut argmin = Complex64::new(0.0, 0.0);
        for z in grid {
            let m = p2.evaluate(z)?;
            let lo = linalg::hermitian_part_min_eig(&m)?;
            if lo < c0 {
                c0 = lo;
                argmin = z;
            }
        }
        Ok(SectorialityReport {
            c0,
            argmin,
            pass: c0 > 0.0,
        })
    }

    /// Assemble the L²-basis matrix at truncation `n_trunc` and report the
    /// relative anti-Hermitian defect together with the smallest Rayleigh
    /// quotient of the Hermitian part.
    pub fn selfadjoint_defect(&self, n_trunc: usize) -> Result<SelfAdjointReport> {
        let gal = crate::galerkin::assemble(self, crate::galerkin::BasisKind::L2, n_trunc)?;
        let m = gal.matrix();
        let anti = m - m.adjoint();
        let norm = m.norm();
        let defect = if norm == 0.0 { 0.0 } else { anti.norm() / norm };
        let min_rayleigh = linalg::hermitian_part_min_eig(m)?;
        Ok(SelfAdjointReport {
            defect,
            min_rayleigh,
        })
    }
}

/// Structured-text operator description:
/// `{"K": 1, "T": 0.5, "N": 32, "form": "standard",
///   "coeffs": {"P2": [[series]], "P1": ..., "P0": ...}}`
/// where `series` is a list of `[n, re, im]` mode triples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub form: OperatorForm,
    pub coeffs: OperatorCoeffsConfig,
}

pub type SeriesConfig = Vec<(i64, f64, f64)>;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OperatorCoeffsConfig {
    #[serde(rename = "P2", default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<Vec<Vec<SeriesConfig>>>,
    #[serde(rename = "P1", default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<Vec<SeriesConfig>>>,
    #[serde(rename = "P0", default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<Vec<SeriesConfig>>>,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<PeriodicOperator> {
        self.build_at(self.n, self.t)
    }

    /// Build with overridden truncation order and strip height.
    pub fn build_at(&self, n_trunc: usize, t: f64) -> Result<PeriodicOperator> {
        let domain = StripDomain::new(t)?;
        domain.check_truncation(n_trunc)?;
        let parse = |grid: &Option<Vec<Vec<SeriesConfig>>>| -> Result<Option<CoefficientMatrix>> {
            let Some(rows) = grid else {
                return Ok(None);
            };
            if rows.len() != self.k {
                return Err(SpectraError::DimensionMismatch(rows.len(), self.k));
            }
            let mut parsed = Vec::with_capacity(self.k);
            for row in rows {
                if row.len() != self.k {
                    return Err(SpectraError::DimensionMismatch(row.len(), self.k));
                }
                let mut out_row = Vec::with_capacity(self.k);
                for series in row {
                    let modes: Vec<(i64, Complex64)> = series
                        .iter()
                        .map(|&(m, re, im)| (m, Complex64::new(re, im)))
                        .collect();
                    out_row.push(HardyFunction::from_modes(domain, n_trunc, &modes)?);
                }
                parsed.push(out_row);
            }
            Ok(Some(CoefficientMatrix::new(parsed)?))
        };
        let second = parse(&self.coeffs.p2)?;
        let first = parse(&self.coeffs.p1)?
            .unwrap_or(CoefficientMatrix::zero(domain, n_trunc, self.k)?);
        let zeroth = parse(&self.coeffs.p0)?
            .unwrap_or(CoefficientMatrix::zero(domain, n_trunc, self.k)?);
        match self.form {
            OperatorForm::Standard => PeriodicOperator::new_standard(second, first, zeroth),
            OperatorForm::Divergence => {
                let p2 = second.ok_or_else(|| {
                    SpectraError::Validation("divergence form requires P2".into())
                })?;
                PeriodicOperator::new_divergence(p2, first, zeroth)
            }
        }
    }
}
