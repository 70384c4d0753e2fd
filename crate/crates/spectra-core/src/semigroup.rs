//! Eigenfunction-expansion evolution S(t)f = Σ c_n e^{-tλ_n} ψ_n for
//! self-adjoint positive operators, with strong-continuity and contraction
//! probes. The spectral data comes from the Galerkin module; only the
//! trusted eigenpairs feed the expansion.

use num_complex::Complex64;

use crate::error::{Result, SpectraError};
use crate::galerkin::{GrowthFit, SpectralDecomposition};
use crate::hardy::VectorHardyFunction;
use crate::operator::SelfAdjointReport;

/// Spectral data prepared for evolution: real eigenvalues sorted
/// increasingly, L²-orthonormal eigenfunctions, and the positivity shift μ.
#[derive(Clone, Debug)]
pub struct SemigroupState {
    lambdas: Vec<f64>,
    eigenfunctions: Vec<VectorHardyFunction>,
    mu: f64,
    growth: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub value: VectorHardyFunction,
    pub coeffs: Vec<Complex64>,
    /// Bound on the dropped modal tail, built from the growth-fit envelope
    /// and the L² mass of f outside the kept modes.
    pub tail_bound: f64,
}

#[derive(Clone, Debug)]
pub struct ContractionReport {
    /// max ‖e^{-μt} S(t) f‖_L / ‖f‖_L over the sample set.
    pub max_ratio_l2_shifted: f64,
    /// The same ratio in the H² norm; reported, not asserted, since the
    /// expansion is built in L² and only continued to the strip.
    pub max_ratio_h: f64,
}

impl SemigroupState {
    /// Accepts a decomposition of an operator whose discretization is
    /// Hermitian (defect below 1e-10) with real trusted eigenvalues. The
    /// shift is μ = 0 when the operator already has Rayleigh floor >= 1,
    /// otherwise (1 - floor) + 1.
    pub fn new(
        decomp: &SpectralDecomposition,
        selfadjoint: &SelfAdjointReport,
        growth: Option<&GrowthFit>,
    ) -> Result<Self> {
        if selfadjoint.defect > 1e-10 {
            return Err(SpectraError::Validation(format!(
                "operator is not self-adjoint: defect {:e}",
                selfadjoint.defect
            )));
        }
        let mut pairs: Vec<(f64, VectorHardyFunction)> = Vec::new();
        for p in decomp.trusted_pairs() {
            if p.lambda.im.abs() > 1e-8 * (1.0 + p.lambda.re.abs()) {
                return Err(SpectraError::Validation(format!(
                    "trusted eigenvalue {} is not real",
                    p.lambda
                )));
            }
            pairs.push((p.lambda.re, p.eigenfunction.clone()));
        }
        if pairs.is_empty() {
            return Err(SpectraError::Validation("no trusted eigenpairs".into()));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Orthonormality across clusters comes from Hermitian symmetry; fail
        // loudly if the solver returned something worse.
        for i in 0..pairs.len().min(24) {
            for j in 0..i {
                let ip = pairs[i].1.l2_inner(&pairs[j].1)?.norm();
                if ip > 1e-7 {
                    return Err(SpectraError::Validation(format!(
                        "eigenfunctions {i},{j} are not L²-orthogonal: {ip:e}"
                    )));
                }
            }
        }
        let mu = if selfadjoint.min_rayleigh >= 1.0 {
            0.0
        } else {
            (1.0 - selfadjoint.min_rayleigh) + 1.0
        };
        Ok(Self {
            lambdas: pairs.iter().map(|p| p.0).collect(),
            eigenfunctions: pairs.into_iter().map(|p| p.1).collect(),
            mu,
            growth: growth.map(|g| (g.c1, g.c2)),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mode_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn eigenfunction(&self, n: usize) -> &VectorHardyFunction {
        &self.eigenfunctions[n]
    }

    /// Modal coefficients c_n = <f, ψ_n>_L.
    pub fn project(&self, f: &VectorHardyFunction) -> Result<Vec<Complex64>> {
        self.eigenfunctions
            .iter()
            .map(|psi| f.l2_inner(psi))
            .collect()
    }

    /// Build f = Σ c_n ψ_n back from modal coefficients.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<VectorHardyFunction> {
        if coeffs.len() != self.lambdas.len() {
            return Err(SpectraError::DimensionMismatch(
                coeffs.len(),
                self.lambdas.len(),
            ));
        }
        let mut acc = self.eigenfunctions[0].scaled(coeffs[0]);
        for (c, psi) in coeffs.iter().zip(&self.eigenfunctions).skip(1) {
            acc = acc.add(&psi.scaled(*c))?;
        }
        Ok(acc)
    }

    /// S(t)f = Σ_{n <= M} c_n e^{-tλ_n} ψ_n.
    pub fn evolve(&self, f: &VectorHardyFunction, t: f64) -> Result<EvolveOutput> {
        if t < 0.0 {
            return Err(SpectraError::Validation(format!(
                "evolution time must be nonnegative, got {t}"
            )));
        }
        let c = self.project(f)?;
        let weights: Vec<Complex64> = c
            .iter()
            .zip(&self.lambdas)
            .map(|(cn, &lam)| cn * Complex64::new((-t * lam).exp(), 0.0))
            .collect();
        let value = self.synthesize(&weights)?;

        // L² mass of f outside the kept modes, damped by the first dropped
        // eigenvalue (Weyl-extrapolated) and amplified by the strip growth
        // envelope when available.
        let kept_mass: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        let ortho_mass = (f.l2_norm().powi(2) - kept_mass).max(0.0).sqrt();
        let m = self.lambdas.len();
        let lam_last = *self.lambdas.last().unwrap();
        let lam_next = lam_last * ((m + 1) as f64 / m as f64).powi(2);
        let tail_bound = match self.growth {
            Some((c1, c2)) => {
                ortho_mass * c1 * (c2 * lam_next.abs().sqrt() - t * lam_next).exp()
            }
            None => ortho_mass * (-t * lam_next).exp(),
        };
        Ok(EvolveOutput {
            value,
            coeffs: weights,
            tail_bound,
        })
    }

    /// ‖S(t)f − f‖_H along a decreasing time ladder.
    pub fn continuity_probe(&self, f: &VectorHardyFunction, ladder: &[f64]) -> Result<Vec<f64>> {
        ladder
            .iter()
            .map(|&t| {
                let st = self.evolve(f, t)?;
                Ok(st.value.sub(&f.truncated(st.value.n_trunc()))?.h_norm())
            })
            .collect()
    }

    /// Contraction ratios of the μ-shifted semigroup over sample functions
    /// and times.
    pub fn contraction_check(
        &self,
        samples: &[VectorHardyFunction],
        times: &[f64],
    ) -> Result<ContractionReport> {
        let mut max_l2 = 0.0_f64;
        let mut max_h = 0.0_f64;
        for f in samples {
            let norm_l = f.l2_norm();
            let norm_h = f.h_norm();
            for &t in times {
                let shift = (-self.mu * t).exp();
                let st = self.evolve(f, t)?;
                max_l2 = max_l2.max(shift * st.value.l2_norm() / norm_l);
                max_h = max_h.max(shift * st.value.h_norm() / norm_h);
            }
        }
        Ok(ContractionReport {
            max_ratio_l2_shifted: max_l2,
            max_ratio_h: max_h,
        })
    }

    /// Check the modal decay guarantee: |c_n e^{-tλ_n}| against the
    /// envelope K e^{C₂ √λ_n − t λ_n} with K = ‖f‖_L max(C₁, 1).
    pub fn coefficient_decay_ok(&self, f: &VectorHardyFunction, t: f64) -> Result<bool> {
        let Some((c1, c2)) = self.growth else {
            return Err(SpectraError::Validation(
                "no growth-fit constants attached".into(),
            ));
        };
        let c = self.project(f)?;
        let k = f.l2_norm() * c1.max(1.0);
        Ok(c.iter().zip(&self.lambdas).all(|(cn, &lam)| {
            cn.norm() * (-t * lam).exp() <= k * (c2 * lam.abs().sqrt() - t * lam).exp() * (1.0 + 1e-12)
        }))
    }
}
