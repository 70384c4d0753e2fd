//! The Hardy-Hilbert space of 2π-periodic functions analytic on a strip,
//! represented by truncated two-sided Fourier series.
//!
//! A function is stored as coefficients c_n for n = -N..N together with the
//! strip half-height T. The squared norm is Σ |c_n|² cosh(2nT), the inner
//! product Σ c_n(f) conj(c_n(g)) cosh(2nT), both equivalent to integrating
//! f·conj(g) over the two boundary lines of the strip.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};

/// Exponent guard: cosh(x) with x beyond this overflows f64.
pub const WEIGHT_EXPONENT_CAP: f64 = 700.0;

/// The strip Ω = { |Im z| < T } with period fixed at 2π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripDomain {
    half_height: f64,
}

impl StripDomain {
    pub fn new(half_height: f64) -> Result<Self> {
        if !(half_height.is_finite() && half_height > 0.0) {
            return Err(SpectraError::InvalidStripHeight(half_height));
        }
        Ok(Self { half_height })
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    /// cosh(2nT), computed from the two exponentials with symmetric averaging.
    pub fn weight(&self, n: i64) -> f64 {
        let x = 2.0 * n as f64 * self.half_height;
        0.5 * (x.exp() + (-x).exp())
    }

    /// ln cosh(2nT); stable for arbitrarily large n.
    pub fn log_weight(&self, n: i64) -> f64 {
        let x = (2.0 * n as f64 * self.half_height).abs();
        // cosh x = e^x (1 + e^{-2x}) / 2
        x + (1.0 + (-2.0 * x).exp()).ln() - std::f64::consts::LN_2
    }

    /// Reject truncation orders whose top weight cosh(2NT) overflows f64.
    pub fn check_truncation(&self, n_trunc: usize) -> Result<()> {
        if 2.0 * n_trunc as f64 * self.half_height > WEIGHT_EXPONENT_CAP {
            return Err(SpectraError::WeightOverflow {
                n: n_trunc as i64,
                t: self.half_height,
            });
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.im.abs() < self.half_height
    }

    fn ensure_same(&self, other: &StripDomain) -> Result<()> {
        if self.half_height != other.half_height {
            return Err(SpectraError::DomainMismatch(
                self.half_height,
                other.half_height,
            ));
        }
        Ok(())
    }
}

/// A 2π-periodic function analytic on the strip, truncated at order N.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyFunction {
    domain: StripDomain,
    /// Coefficients c_n for n = -N..N; index i holds n = i - N.
    coeffs: Vec<Complex64>,
}

impl HardyFunction {
    pub fn new(domain: StripDomain, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(SpectraError::BadCoefficientCount(coeffs.len()));
        }
        domain.check_truncation(coeffs.len() / 2)?;
        Ok(Self { domain, coeffs })
    }

    pub fn zero(domain: StripDomain, n_trunc: usize) -> Result<Self> {
        Self::new(domain, vec![Complex64::new(0.0, 0.0); 2 * n_trunc + 1])
    }

    /// Build from a sparse list of (mode, value) pairs.
    pub fn from_modes(domain: StripDomain, n_trunc: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut f = Self::zero(domain, n_trunc)?;
        for &(n, c) in modes {
            if n.unsigned_abs() as usize > n_trunc {
                return Err(SpectraError::Validation(format!(
                    "mode {n} outside truncation order {n_trunc}"
                )));
            }
            let i = (n + n_trunc as i64) as usize;
            f.coeffs[i] += c;
        }
        Ok(f)
    }

    pub fn constant(domain: StripDomain, n_trunc: usize, value: Complex64) -> Result<Self> {
        Self::from_modes(domain, n_trunc, &[(0, value)])
    }

    /// The exponential e^{inz}.
    pub fn exponential(domain: StripDomain, n_trunc: usize, n: i64) -> Result<Self> {
        Self::from_modes(domain, n_trunc, &[(n, Complex64::new(1.0, 0.0))])
    }

    pub fn domain(&self) -> StripDomain {
        self.domain
    }

    pub fn n_trunc(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Coefficient c_n, zero outside the truncation band.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let nt = self.n_trunc() as i64;
        if n < -nt || n > nt {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + nt) as usize]
        }
    }

    /// Coefficients in order n = -N..N.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn h_norm_sq(&self) -> f64 {
        let nt = self.n_trunc() as i64;
        (-nt..=nt)
            .map(|n| self.coeff(n).norm_sqr() * self.domain.weight(n))
            .sum()
    }

    /// The weighted-coefficient norm sqrt(Σ |c_n|² cosh(2nT)).
    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    /// Inner product Σ c_n(f) conj(c_n(g)) cosh(2nT).
    pub fn h_inner(&self, other: &HardyFunction) -> Result<Complex64> {
        self.domain.ensure_same(&other.domain)?;
        let nt = self.n_trunc().max(other.n_trunc()) as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -nt..=nt {
            acc += self.coeff(n) * other.coeff(n).conj() * self.domain.weight(n);
        }
        Ok(acc)
    }

    /// Norm in L² of the period (mean-square on the real axis).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn l2_inner(&self, other: &HardyFunction) -> Result<Complex64> {
        self.domain.ensure_same(&other.domain)?;
        let nt = self.n_trunc().max(other.n_trunc()) as i64;
        Ok((-nt..=nt).map(|n| self.coeff(n) * other.coeff(n).conj()).sum())
    }

    fn eval_series(&self, z: Complex64) -> Complex64 {
        let nt = self.n_trunc();
        let up = (Complex64::i() * z).exp();
        let dn = (-Complex64::i() * z).exp();
        let mut acc = self.coeffs[nt];
        let mut pu = Complex64::new(1.0, 0.0);
        let mut pd = Complex64::new(1.0, 0.0);
        for n in 1..=nt {
            pu *= up;
            pd *= dn;
            acc += self.coeffs[nt + n] * pu + self.coeffs[nt - n] * pd;
        }
        acc
    }

    /// Evaluate the Fourier sum at a point of the open strip.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        if !self.domain.contains(z) {
            return Err(SpectraError::OutsideStrip {
                z,
                t: self.domain.half_height,
            });
        }
        Ok(self.eval_series(z))
    }

    /// Evaluate on the closed strip |Im z| <= T. Boundary evaluation is legal
    /// for trace output, but the uniform interior bound degenerates there, so
    /// this entry point is kept separate from `evaluate`.
    pub fn evaluate_closed(&self, z: Complex64) -> Result<Complex64> {
        if z.im.abs() > self.domain.half_height * (1.0 + 1e-12) {
            return Err(SpectraError::OutsideStrip {
                z,
                t: self.domain.half_height,
            });
        }
        Ok(self.eval_series(z))
    }

    /// Termwise derivative c_n -> in·c_n; exact on the truncated series.
    pub fn derivative(&self) -> HardyFunction {
        let nt = self.n_trunc() as i64;
        let coeffs = (-nt..=nt)
            .map(|n| self.coeff(n) * Complex64::new(0.0, n as f64))
            .collect();
        HardyFunction {
            domain: self.domain,
            coeffs,
        }
    }

    /// Coefficient convolution re-truncated to max(N_f, N_g), together with
    /// the weighted norm of the discarded tail (infinite when the tail weight
    /// is itself out of f64 range).
    pub fn product_with_tail(&self, other: &HardyFunction) -> Result<(HardyFunction, f64)> {
        self.domain.ensure_same(&other.domain)?;
        let full = self.product_full(other)?;
        let keep = self.n_trunc().max(other.n_trunc());
        let tail_band = full.n_trunc();
        let mut tail_sq = 0.0_f64;
        for n in (keep as i64 + 1)..=(tail_band as i64) {
            for s in [n, -n] {
                let c = full.coeff(s);
                if c.norm_sqr() > 0.0 {
                    // log-space accumulation: the tail weight may exceed f64.
                    let log_term = 2.0 * c.norm().ln() + self.domain.log_weight(s);
                    tail_sq += log_term.exp();
                }
            }
        }
        Ok((full.truncated(keep), tail_sq.sqrt()))
    }

    pub fn product(&self, other: &HardyFunction) -> Result<HardyFunction> {
        Ok(self.product_with_tail(other)?.0)
    }

    /// Full coefficient convolution on the band |n| <= N_f + N_g (exact).
    pub fn product_full(&self, other: &HardyFunction) -> Result<HardyFunction> {
        self.domain.ensure_same(&other.domain)?;
        let na = self.n_trunc() as i64;
        let nb = other.n_trunc() as i64;
        let nc = na + nb;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * nc + 1) as usize];
        for i in -na..=na {
            let a = self.coeff(i);
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for j in -nb..=nb {
                coeffs[(i + j + nc) as usize] += a * other.coeff(j);
            }
        }
        Ok(HardyFunction {
            domain: self.domain,
            coeffs,
        })
    }

    /// Drop modes beyond |n| = n_trunc (or pad with zeros when growing).
    pub fn truncated(&self, n_trunc: usize) -> HardyFunction {
        let nt = n_trunc as i64;
        let coeffs = (-nt..=nt).map(|n| self.coeff(n)).collect();
        HardyFunction {
            domain: self.domain,
            coeffs,
        }
    }

    /// Recover coefficients from values on the uniform real grid
    /// x_j = 2πj/Q, j = 0..Q-1. Q must be even with Q >= 2N+2; the discrete
    /// transform is exact (up to rounding) on inputs of truncation <= N.
    pub fn from_real_samples(
        samples: &[Complex64],
        domain: StripDomain,
        n_trunc: usize,
    ) -> Result<Self> {
        let q = samples.len();
        if q < 2 * n_trunc + 2 || q % 2 != 0 {
            return Err(SpectraError::InsufficientSamples {
                needed: 2 * n_trunc + 2,
                got: q,
                n_trunc,
            });
        }
        domain.check_truncation(n_trunc)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n_trunc + 1];
        let step = -2.0 * std::f64::consts::PI / q as f64;
        for (i, slot) in coeffs.iter_mut().enumerate() {
            let n = i as i64 - n_trunc as i64;
            let w = Complex64::from_polar(1.0, step * n as f64);
            let mut p = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for s in samples {
                acc += s * p;
                p *= w;
            }
            *slot = acc / q as f64;
        }
        Ok(Self { domain, coeffs })
    }

    /// Values on the uniform real grid x_j = 2πj/Q.
    pub fn real_samples(&self, q: usize) -> Vec<Complex64> {
        (0..q)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / q as f64;
                self.eval_series(Complex64::new(x, 0.0))
            })
            .collect()
    }

    pub fn scaled(&self, factor: Complex64) -> HardyFunction {
        HardyFunction {
            domain: self.domain,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &HardyFunction) -> Result<HardyFunction> {
        self.domain.ensure_same(&other.domain)?;
        let nt = self.n_trunc().max(other.n_trunc()) as i64;
        let coeffs = (-nt..=nt).map(|n| self.coeff(n) + other.coeff(n)).collect();
        Ok(HardyFunction {
            domain: self.domain,
            coeffs,
        })
    }

    pub fn sub(&self, other: &HardyFunction) -> Result<HardyFunction> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Uniform interior bound |f(z)| <= 2 ||f||_H (1 - e^{2(|Im z|-T)})^{-1/2}.
    pub fn interior_bound(&self, z: Complex64) -> Result<f64> {
        if !self.domain.contains(z) {
            return Err(SpectraError::OutsideStrip {
                z,
                t: self.domain.half_height,
            });
        }
        let gap = 2.0 * (z.im.abs() - self.domain.half_height);
        Ok(2.0 * self.h_norm() / (1.0 - gap.exp()).sqrt())
    }

    /// Coefficients as a dense vector in order n = -N..N.
    pub fn coeff_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.coeffs)
    }
}

/// Element reproducing evaluation at a strip point: <f, kernel_at(w)> = f(w)
/// for every f of matching truncation.
#[derive(Clone, Debug)]
pub struct KernelElement {
    base_point: Complex64,
    element: HardyFunction,
}

impl KernelElement {
    /// Coefficients conj(e^{inw}) / cosh(2nT), truncated at N.
    pub fn new(w: Complex64, domain: StripDomain, n_trunc: usize) -> Result<Self> {
        if !domain.contains(w) {
            return Err(SpectraError::OutsideStrip {
                z: w,
                t: domain.half_height(),
            });
        }
        domain.check_truncation(n_trunc)?;
        let nt = n_trunc as i64;
        let coeffs = (-nt..=nt)
            .map(|n| {
                let phase = (Complex64::i() * n as f64 * w).exp();
                phase.conj() / domain.weight(n)
            })
            .collect();
        Ok(Self {
            base_point: w,
            element: HardyFunction {
                domain,
                coeffs,
            },
        })
    }

    pub fn base_point(&self) -> Complex64 {
        self.base_point
    }

    pub fn element(&self) -> &HardyFunction {
        &self.element
    }

    pub fn into_element(self) -> HardyFunction {
        self.element
    }
}

/// Right-hand side of the kernel continuity estimate
/// ||g_v - g_w||² <= 4 |v-w|² e^{τ-T} / (1 - e^{τ-T})², τ = max(|Im v|, |Im w|).
pub fn kernel_continuity_bound(v: Complex64, w: Complex64, domain: StripDomain) -> f64 {
    let tau = v.im.abs().max(w.im.abs());
    let r = (tau - domain.half_height()).exp();
    4.0 * (v - w).norm_sqr() * r / ((1.0 - r) * (1.0 - r))
}

/// A C^K-valued Hardy function, stored componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorHardyFunction {
    components: Vec<HardyFunction>,
}

impl VectorHardyFunction {
    pub fn new(components: Vec<HardyFunction>) -> Result<Self> {
        if components.is_empty() {
            return Err(SpectraError::Validation("empty component list".into()));
        }
        let d = components[0].domain();
        for c in &components[1..] {
            d.ensure_same(&c.domain())?;
        }
        Ok(Self { components })
    }

    pub fn scalar(f: HardyFunction) -> Self {
        Self {
            components: vec![f],
        }
    }

    pub fn zero(domain: StripDomain, n_trunc: usize, k: usize) -> Result<Self> {
        Self::new(vec![HardyFunction::zero(domain, n_trunc)?; k])
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn domain(&self) -> StripDomain {
        self.components[0].domain()
    }

    pub fn n_trunc(&self) -> usize {
        self.components.iter().map(|c| c.n_trunc()).max().unwrap()
    }

    pub fn component(&self, i: usize) -> &HardyFunction {
        &self.components[i]
    }

    pub fn components(&self) -> &[HardyFunction] {
        &self.components
    }

    pub fn h_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.h_norm_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise sum of scalar inner products, matching g*(z) f(z).
    pub fn h_inner(&self, other: &VectorHardyFunction) -> Result<Complex64> {
        if self.k() != other.k() {
            return Err(SpectraError::DimensionMismatch(self.k(), other.k()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.h_inner(b)?;
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_inner(&self, other: &VectorHardyFunction) -> Result<Complex64> {
        if self.k() != other.k() {
            return Err(SpectraError::DimensionMismatch(self.k(), other.k()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.l2_inner(b)?;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.evaluate(z)).collect()
    }

    pub fn evaluate_closed(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.evaluate_closed(z)).collect()
    }

    /// Euclidean norm of the value vector at z (closed strip).
    pub fn value_norm(&self, z: Complex64) -> Result<f64> {
        Ok(self
            .evaluate_closed(z)?
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn scaled(&self, factor: Complex64) -> VectorHardyFunction {
        VectorHardyFunction {
            components: self.components.iter().map(|c| c.scaled(factor)).collect(),
        }
    }

    pub fn add(&self, other: &VectorHardyFunction) -> Result<VectorHardyFunction> {
        if self.k() != other.k() {
            return Err(SpectraError::DimensionMismatch(self.k(), other.k()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(VectorHardyFunction { components })
    }

    pub fn sub(&self, other: &VectorHardyFunction) -> Result<VectorHardyFunction> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn truncated(&self, n_trunc: usize) -> VectorHardyFunction {
        VectorHardyFunction {
            components: self.components.iter().map(|c| c.truncated(n_trunc)).collect(),
        }
    }
}

/// Wire format: {"T": real, "N": int, "coeffs": [[re, im], ...]} with the
/// coefficients ordered n = -N..N.
#[derive(Serialize, Deserialize)]
struct HardyFunctionWire {
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "N")]
    n: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for HardyFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        HardyFunctionWire {
            t: self.domain.half_height(),
            n: self.n_trunc(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HardyFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let wire = HardyFunctionWire::deserialize(deserializer)?;
        let domain = StripDomain::new(wire.t).map_err(D::Error::custom)?;
        if wire.coeffs.len() != 2 * wire.n + 1 {
            return Err(D::Error::custom(format!(
                "expected {} coefficients for N = {}, got {}",
                2 * wire.n + 1,
                wire.n,
                wire.coeffs.len()
            )));
        }
        let coeffs = wire
            .coeffs
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        HardyFunction::new(domain, coeffs).map_err(D::Error::custom)
    }
}

impl Serialize for VectorHardyFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.components.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VectorHardyFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let components = Vec::<HardyFunction>::deserialize(deserializer)?;
        VectorHardyFunction::new(components).map_err(D::Error::custom)
    }
}

/// Test-only generator shared by the module test suites: a random function
/// whose coefficients are scaled so the weighted norm stays O(1).
#[cfg(test)]
pub(crate) fn random_function(
    rng: &mut rand_chacha::ChaCha8Rng,
    domain: StripDomain,
    n: usize,
) -> HardyFunction {
    use rand::Rng;
    let nt = n as i64;
    let coeffs = (-nt..=nt)
        .map(|m| {
            let decay = (-0.5 * domain.log_weight(m)).exp();
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay
        })
        .collect();
    HardyFunction::new(domain, coeffs).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dom(t: f64) -> StripDomain {
        StripDomain::new(t).unwrap()
    }

    /// Trapezoid quadrature of the boundary inner product on q nodes.
    fn boundary_inner(f: &HardyFunction, g: &HardyFunction, q: usize) -> Complex64 {
        let t = f.domain().half_height();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..q {
            let x = 2.0 * std::f64::consts::PI * j as f64 / q as f64;
            let top = Complex64::new(x, t);
            let bot = Complex64::new(x, -t);
            acc += f.evaluate_closed(top).unwrap() * g.evaluate_closed(top).unwrap().conj()
                + f.evaluate_closed(bot).unwrap() * g.evaluate_closed(bot).unwrap().conj();
        }
        // (1/4π) ∫ ... dx with dx = 2π/q.
        acc / (2.0 * q as f64)
    }

    #[test]
    fn norm_of_constant_is_one() {
        let f = HardyFunction::constant(dom(0.9), 4, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(f.h_norm(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn norm_of_exponential_is_sqrt_weight() {
        for n in [-5i64, -1, 0, 3, 8] {
            let d = dom(0.7);
            let f = HardyFunction::exponential(d, 8, n).unwrap();
            assert_relative_eq!(f.h_norm(), d.weight(n).sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn norm_matches_boundary_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = dom(0.7);
        let f = random_function(&mut rng, d, 16);
        let quad = boundary_inner(&f, &f, 4 * 16 + 4).re;
        assert!((f.h_norm_sq() - quad).abs() <= 1e-12 * f.h_norm_sq().max(1.0));
    }

    #[test]
    fn inner_product_orthogonal_exponentials() {
        let d = dom(0.5);
        let f = HardyFunction::exponential(d, 6, 2).unwrap();
        let g = HardyFunction::exponential(d, 6, -3).unwrap();
        assert_eq!(f.h_inner(&g).unwrap(), Complex64::new(0.0, 0.0));
        let ff = f.h_inner(&f).unwrap();
        assert_relative_eq!(ff.re, f.h_norm_sq(), max_relative = 1e-14);
    }

    #[test]
    fn inner_product_matches_boundary_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let d = dom(0.5);
        let f = random_function(&mut rng, d, 16);
        let g = random_function(&mut rng, d, 16);
        let alg = f.h_inner(&g).unwrap();
        let quad = boundary_inner(&f, &g, 4 * 16 + 4);
        assert!((alg - quad).norm() <= 1e-12 * (f.h_norm() * g.h_norm()).max(1.0));
    }

    #[test]
    fn inner_product_conjugate_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dom(0.4);
        let f = random_function(&mut rng, d, 8);
        let g = random_function(&mut rng, d, 8);
        let ab = f.h_inner(&g).unwrap();
        let ba = g.h_inner(&f).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let f = HardyFunction::constant(dom(0.5), 2, Complex64::new(1.0, 0.0)).unwrap();
        let g = HardyFunction::constant(dom(0.6), 2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            f.h_inner(&g),
            Err(SpectraError::DomainMismatch(_, _))
        ));
    }

    #[test]
    fn truncation_guard_rejects_overflow() {
        let d = dom(10.0);
        assert!(matches!(
            HardyFunction::zero(d, 40),
            Err(SpectraError::WeightOverflow { .. })
        ));
    }

    #[test]
    fn evaluate_constant_and_exponential() {
        let d = dom(1.0);
        let one = HardyFunction::constant(d, 3, Complex64::new(1.0, 0.0)).unwrap();
        let z = Complex64::new(0.3, -0.4);
        assert!((one.evaluate(z).unwrap() - 1.0).norm() < 1e-15);

        let f = HardyFunction::exponential(d, 5, 2).unwrap();
        let w = Complex64::new(0.0, 0.25);
        // e^{inz} at z = iτ is e^{-nτ}
        assert_relative_eq!(f.evaluate(w).unwrap().re, (-2.0 * 0.25f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn evaluate_outside_strip_fails() {
        let d = dom(0.5);
        let f = HardyFunction::constant(d, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(f.evaluate(Complex64::new(0.0, 0.5)).is_err());
        assert!(f.evaluate_closed(Complex64::new(0.0, 0.5)).is_ok());
        assert!(f.evaluate_closed(Complex64::new(0.0, 0.51)).is_err());
    }

    #[test]
    fn interior_bound_holds_strictly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = dom(0.8);
        let f = random_function(&mut rng, d, 12);
        for i in 0..40 {
            let x = 2.0 * std::f64::consts::PI * (i as f64) / 40.0;
            for tau in [-0.7, -0.3, 0.0, 0.4, 0.75] {
                let z = Complex64::new(x, tau);
                let val = f.evaluate(z).unwrap().norm();
                assert!(val < f.interior_bound(z).unwrap());
            }
        }
    }

    #[test]
    fn kernel_reproduces_point_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = dom(0.7);
        let f = random_function(&mut rng, d, 16);
        for &(x, tau) in &[(0.0, 0.0), (1.0, 0.3), (4.0, -0.5), (6.0, 0.62)] {
            let w = Complex64::new(x, tau);
            let gw = KernelElement::new(w, d, 16).unwrap();
            let lhs = f.h_inner(gw.element()).unwrap();
            let rhs = f.evaluate(w).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * f.h_norm());
        }
    }

    #[test]
    fn kernel_zero_mode_coefficient_is_one() {
        let d = dom(0.9);
        let g = KernelElement::new(Complex64::new(1.0, 0.2), d, 8).unwrap();
        let c0 = g.element().coeff(0);
        assert!((c0 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_continuity_bound_dominates() {
        let d = dom(0.8);
        let n = 16;
        let pts = [
            Complex64::new(0.2, 0.1),
            Complex64::new(0.25, 0.12),
            Complex64::new(3.0, -0.4),
            Complex64::new(3.1, -0.35),
            Complex64::new(5.0, 0.5),
            Complex64::new(5.05, 0.52),
        ];
        for v in pts {
            for w in pts {
                if v == w {
                    continue;
                }
                let gv = KernelElement::new(v, d, n).unwrap().into_element();
                let gw = KernelElement::new(w, d, n).unwrap().into_element();
                let dist_sq = gv.sub(&gw).unwrap().h_norm_sq();
                assert!(dist_sq <= kernel_continuity_bound(v, w, d) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sampling_recovers_cosine() {
        let d = dom(0.5);
        let q = 16;
        let samples: Vec<Complex64> = (0..q)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / q as f64;
                Complex64::new(x.cos(), 0.0)
            })
            .collect();
        let f = HardyFunction::from_real_samples(&samples, d, 4).unwrap();
        assert!((f.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coeff(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(f.coeff(0).norm() < 1e-14);
    }

    #[test]
    fn sampling_exp_cos_gives_bessel_coefficients() {
        // Independent series oracle for I_n(1).
        fn bessel_i(n: u32, x: f64) -> f64 {
            let mut term = 1.0;
            for i in 1..=n {
                term *= 0.5 * x / i as f64;
            }
            let mut sum = term;
            for k in 1..60 {
                term *= 0.25 * x * x / (k as f64 * (k as f64 + n as f64));
                sum += term;
            }
            sum
        }
        let d = dom(0.5);
        let n = 16;
        let q = 4 * n + 4;
        let samples: Vec<Complex64> = (0..q)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / q as f64;
                Complex64::new(x.cos().exp(), 0.0)
            })
            .collect();
        let f = HardyFunction::from_real_samples(&samples, d, n).unwrap();
        for m in 0..=10i64 {
            let want = bessel_i(m as u32, 1.0);
            assert!(
                (f.coeff(m).re - want).abs() < 1e-10,
                "I_{m}(1): got {}, want {want}",
                f.coeff(m).re
            );
            assert!((f.coeff(-m).re - want).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_round_trip_is_exact_on_band_limited_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let d = dom(0.6);
        let f = random_function(&mut rng, d, 12);
        let samples = f.real_samples(4 * 12 + 4);
        let g = HardyFunction::from_real_samples(&samples, d, 12).unwrap();
        for n in -12..=12i64 {
            assert!((f.coeff(n) - g.coeff(n)).norm() < 1e-13);
        }
    }

    #[test]
    fn insufficient_samples_rejected() {
        let d = dom(0.5);
        let samples = vec![Complex64::new(0.0, 0.0); 8];
        assert!(HardyFunction::from_real_samples(&samples, d, 4).is_err());
        let odd = vec![Complex64::new(0.0, 0.0); 11];
        assert!(HardyFunction::from_real_samples(&odd, d, 4).is_err());
    }

    #[test]
    fn derivative_of_exponential() {
        let d = dom(0.5);
        let f = HardyFunction::exponential(d, 6, 4).unwrap();
        let df = f.derivative();
        assert!((df.coeff(4) - Complex64::new(0.0, 4.0)).norm() < 1e-15);
    }

    #[test]
    fn product_identity_and_cosine_square() {
        let d = dom(0.5);
        let one = HardyFunction::constant(d, 4, Complex64::new(1.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_function(&mut rng, d, 4);
        let p = one.product(&f).unwrap();
        for n in -4..=4i64 {
            assert!((p.coeff(n) - f.coeff(n)).norm() < 1e-15);
        }

        let half = Complex64::new(0.5, 0.0);
        let cosz = HardyFunction::from_modes(d, 4, &[(1, half), (-1, half)]).unwrap();
        let sq = cosz.product(&cosz).unwrap();
        assert!((sq.coeff(0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((sq.coeff(2) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((sq.coeff(-2) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_reports_discarded_tail() {
        let d = dom(0.3);
        let f = HardyFunction::exponential(d, 4, 3).unwrap();
        let (p, tail) = f.product_with_tail(&f).unwrap();
        // e^{3iz} squared = e^{6iz}, entirely outside |n| <= 4.
        assert!(p.coeffs().iter().all(|c| c.norm() == 0.0));
        assert_relative_eq!(tail, d.weight(6).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let d = dom(0.75);
        let f = random_function(&mut rng, d, 5);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"T\":0.75"));
        let g: HardyFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(f, g);

        let v = VectorHardyFunction::new(vec![f.clone(), f]).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let w: VectorHardyFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(v, w);
    }

    proptest! {
        #[test]
        fn norm_nondecreasing_in_height(seed in 0u64..500, t1 in 0.05f64..1.0, dt in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d1 = dom(t1);
            let d2 = dom(t1 + dt);
            let f1 = random_function(&mut rng, d1, 8);
            let f2 = HardyFunction::new(d2, f1.coeffs().to_vec()).unwrap();
            prop_assert!(f2.h_norm() >= f1.h_norm() * (1.0 - 1e-12));
        }

        #[test]
        fn reproducing_property_random(seed in 0u64..200, x in 0.0f64..6.28, tau_frac in -0.9f64..0.9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = dom(0.7);
            let f = random_function(&mut rng, d, 16);
            let w = Complex64::new(x, tau_frac * 0.7);
            let gw = KernelElement::new(w, d, 16).unwrap();
            let lhs = f.h_inner(gw.element()).unwrap();
            let rhs = f.evaluate(w).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-11 * f.h_norm().max(1e-30));
        }

        #[test]
        fn parseval_random(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = dom(0.5);
            let f = random_function(&mut rng, d, 12);
            let g = random_function(&mut rng, d, 12);
            let alg = f.h_inner(&g).unwrap();
            let quad = boundary_inner(&f, &g, 4 * 12 + 4);
            prop_assert!((alg - quad).norm() <= 1e-11 * (f.h_norm() * g.h_norm()).max(1e-30));
        }
    }
}
