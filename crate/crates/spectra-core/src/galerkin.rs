//! Dense spectral discretization of periodic operators in the exponential
//! bases of ⊕_K L²_per and ⊕_K H², eigenvalue/eigenfunction extraction, and
//! the eigenvalue-growth diagnostics (Weyl band, strip growth envelope).
//!
//! Both bases index the modes n = -N..N; the H² basis uses the normalized
//! exponentials e^{inz}/sqrt(cosh 2nT), so its matrix is the L² matrix
//! conjugated by a diagonal weight — the two spectra agree up to round-off,
//! which the cross-basis tests exercise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SpectraError};
use crate::hardy::{HardyFunction, VectorHardyFunction};
use crate::linalg;
use crate::operator::{OperatorForm, PeriodicOperator};

/// Hard cap on the discretization size (2N+1)K.
pub const SIZE_CAP: usize = 4096;

/// Relative gap below which eigenvalues are reported as one cluster.
pub const CLUSTER_GAP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    L2,
    H2,
}

impl BasisKind {
    pub fn label(&self) -> &'static str {
        match self {
            BasisKind::L2 => "l2",
            BasisKind::H2 => "h2",
        }
    }
}

/// Dense matrix of the operator restricted to the span of the basis
/// exponentials |n| <= N, followed by re-truncation.
#[derive(Clone, Debug)]
pub struct GalerkinMatrix {
    basis: BasisKind,
    n_trunc: usize,
    k: usize,
    matrix: DMatrix<Complex64>,
    operator: PeriodicOperator,
}

impl GalerkinMatrix {
    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn operator(&self) -> &PeriodicOperator {
        &self.operator
    }
}

/// Assemble the operator in the chosen basis at truncation order N.
///
/// The matrix has Toeplitz-block structure: block (m, n) is the (m-n)-th
/// Fourier coefficient matrix of the symbol attached to each derivative
/// order, times the diagonal action of that derivative on e^{inz}.
pub fn assemble(
    op: &PeriodicOperator,
    basis: BasisKind,
    n_trunc: usize,
) -> Result<GalerkinMatrix> {
    let k = op.k();
    let size = (2 * n_trunc + 1) * k;
    if size > SIZE_CAP {
        return Err(SpectraError::SizeCap(size, SIZE_CAP));
    }
    op.domain().check_truncation(n_trunc)?;
    let nt = n_trunc as i64;
    let deg = op.max_degree() as i64 + 1;
    // Cache the coefficient matrices of every order for each offset d.
    let offsets: Vec<i64> = (-deg..=deg).collect();
    let second: Option<Vec<DMatrix<Complex64>>> = op
        .second()
        .map(|c| offsets.iter().map(|&d| c.fourier_matrix(d)).collect());
    let first: Vec<DMatrix<Complex64>> =
        offsets.iter().map(|&d| op.first().fourier_matrix(d)).collect();
    let zeroth: Vec<DMatrix<Complex64>> =
        offsets.iter().map(|&d| op.zeroth().fourier_matrix(d)).collect();
    let lookup = |store: &Vec<DMatrix<Complex64>>, d: i64| -> Option<DMatrix<Complex64>> {
        if d < -deg || d > deg {
            None
        } else {
            Some(store[(d + deg) as usize].clone())
        }
    };

    let mut matrix = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
    for m in -nt..=nt {
        for n in -nt..=nt {
            let d = m - n;
            if d.abs() > deg {
                continue;
            }
            let i_n = Complex64::new(0.0, n as f64);
            let mut block = DMatrix::from_element(k, k, Complex64::new(0.0, 0.0));
            if let Some(sec) = &second {
                if let Some(c2) = lookup(sec, d) {
                    let factor = match op.form() {
                        // A₂ D²  ->  (in)²
                        OperatorForm::Standard => i_n * i_n,
                        // −D P₂ D  ->  −(im)(in) = m·n
                        OperatorForm::Divergence => Complex64::new((m * n) as f64, 0.0),
                    };
                    block += c2 * factor;
                }
            }
            if let Some(c1) = lookup(&first, d) {
                block += c1 * i_n;
            }
            if let Some(c0) = lookup(&zeroth, d) {
                block += c0;
            }
            let scale = match basis {
                BasisKind::L2 => 1.0,
                BasisKind::H2 => {
                    (0.5 * (op.domain().log_weight(m) - op.domain().log_weight(n))).exp()
                }
            };
            let row0 = ((m + nt) as usize) * k;
            let col0 = ((n + nt) as usize) * k;
            for i in 0..k {
                for j in 0..k {
                    matrix[(row0 + i, col0 + j)] = block[(i, j)] * scale;
                }
            }
        }
    }
    Ok(GalerkinMatrix {
        basis,
        n_trunc,
        k,
        matrix,
        operator: op.clone(),
    })
}

/// One eigenpair of the discretized operator.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub lambda: Complex64,
    /// Eigenfunction normalized to ‖ψ‖_L = 1 with its largest coefficient
    /// rotated onto the positive real axis.
    pub eigenfunction: VectorHardyFunction,
    /// ‖Lψ − λψ‖_L on the full convolution band.
    pub residual: f64,
    /// Size of the cluster this eigenvalue belongs to.
    pub multiplicity: usize,
    pub cluster: usize,
    pub trusted: bool,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub pairs: Vec<SpectralPair>,
    pub basis: BasisKind,
    pub n_trunc: usize,
    pub k: usize,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn trusted_pairs(&self) -> impl Iterator<Item = &SpectralPair> {
        self.pairs.iter().filter(|p| p.trusted)
    }
}

/// Full dense eigen-decomposition keeping the `keep` smallest-|λ| pairs,
/// sorted by real then imaginary part, clustered at relative gap 1e-7 with
/// in-cluster L²-orthogonalization.
pub fn spectrum(gal: &GalerkinMatrix, keep: usize) -> Result<SpectralDecomposition> {
    let size = gal.size();
    let keep = keep.min(size);
    let (vals, vecs) = linalg::eig(&gal.matrix)?;

    // Rank by |λ| to select the kept pairs and set the trust boundary.
    let mut by_modulus: Vec<usize> = (0..size).collect();
    by_modulus.sort_by(|&a, &b| {
        vals[a]
            .norm()
            .partial_cmp(&vals[b].norm())
            .unwrap()
            .then(vals[a].re.partial_cmp(&vals[b].re).unwrap())
            .then(vals[a].im.partial_cmp(&vals[b].im).unwrap())
    });
    let trust_rank = size / 2;
    let mut kept: Vec<(usize, bool)> = by_modulus
        .iter()
        .enumerate()
        .take(keep)
        .map(|(rank, &idx)| (idx, rank < trust_rank))
        .collect();
    kept.sort_by(|&(a, _), &(b, _)| {
        vals[a]
            .re
            .partial_cmp(&vals[b].re)
            .unwrap()
            .then(vals[a].im.partial_cmp(&vals[b].im).unwrap())
    });

    // Cluster by adjacency in the sorted order.
    let mut clusters: Vec<Vec<(usize, bool)>> = Vec::new();
    for (idx, trusted) in kept {
        let start_new = match clusters.last() {
            None => true,
            Some(c) => {
                let prev = vals[c.last().unwrap().0];
                (vals[idx] - prev).norm() > CLUSTER_GAP * vals[idx].norm().max(1.0)
            }
        };
        if start_new {
            clusters.push(vec![(idx, trusted)]);
        } else {
            clusters.last_mut().unwrap().push((idx, trusted));
        }
    }

    let nt = gal.n_trunc;
    let k = gal.k;
    let domain = gal.operator.domain();
    let mut pairs = Vec::new();
    for (cluster_id, members) in clusters.iter().enumerate() {
        // Orthonormalize the cluster's eigenvectors in ℓ² (= L² of the
        // function) so degenerate pairs are reported in a canonical frame.
        let mut basis_vecs: Vec<DVector<Complex64>> = Vec::new();
        for &(idx, _) in members {
            let mut v = vecs.column(idx).clone_owned();
            for b in &basis_vecs {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm > 1e-13 {
                v /= Complex64::new(norm, 0.0);
                basis_vecs.push(v);
            } else {
                // Defective direction: fall back to the raw vector.
                let mut raw = vecs.column(idx).clone_owned();
                raw /= Complex64::new(raw.norm(), 0.0);
                basis_vecs.push(raw);
            }
        }
        for ((idx, trusted), v) in members.iter().zip(basis_vecs) {
            let lambda = vals[*idx];
            let func = vector_from_eigvec(gal, &v, nt, k)?;
            let (func, _phase) = normalize_pair(func);
            let residual = gal.operator.residual_l2(&func, lambda)?;
            pairs.push(SpectralPair {
                lambda,
                eigenfunction: func,
                residual,
                multiplicity: members.len(),
                cluster: cluster_id,
                trusted: *trusted,
            });
            let _ = domain;
        }
    }
    Ok(SpectralDecomposition {
        pairs,
        basis: gal.basis,
        n_trunc: nt,
        k,
    })
}

/// Convert an eigenvector of the discretized operator into coefficient
/// space (undoing the H² diagonal weight when needed).
fn vector_from_eigvec(
    gal: &GalerkinMatrix,
    v: &DVector<Complex64>,
    nt: usize,
    k: usize,
) -> Result<VectorHardyFunction> {
    let domain = gal.operator.domain();
    let mut comps = Vec::with_capacity(k);
    for i in 0..k {
        let coeffs: Vec<Complex64> = (0..(2 * nt + 1))
            .map(|mi| {
                let m = mi as i64 - nt as i64;
                let raw = v[mi * k + i];
                match gal.basis {
                    BasisKind::L2 => raw,
                    BasisKind::H2 => raw * (-0.5 * domain.log_weight(m)).exp(),
                }
            })
            .collect();
        comps.push(HardyFunction::new(domain, coeffs)?);
    }
    VectorHardyFunction::new(comps)
}

/// Normalize to unit L² norm and rotate the largest-modulus coefficient to
/// the positive real axis. Returns the applied phase for reproducibility.
fn normalize_pair(f: VectorHardyFunction) -> (VectorHardyFunction, Complex64) {
    let norm = f.l2_norm();
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_mod = -1.0;
    for comp in f.components() {
        for &c in comp.coeffs() {
            if c.norm() > best_mod * (1.0 + 1e-12) {
                best_mod = c.norm();
                best = c;
            }
        }
    }
    let phase = if best_mod > 0.0 {
        best.conj() / best.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let factor = phase / Complex64::new(norm, 0.0);
    (f.scaled(factor), phase)
}

/// Empirical Weyl band: min and max of Re λ_m / m² over the trusted interior
/// indices 1 <= m <= max_m (0-based, sorted by real part).
#[derive(Clone, Debug)]
pub struct WeylBand {
    pub beta1_sq: f64,
    pub beta2_sq: f64,
    pub samples: usize,
    pub pass: bool,
}

pub fn weyl_bounds(decomp: &SpectralDecomposition, max_m: usize) -> Result<WeylBand> {
    let trusted: Vec<&SpectralPair> = decomp.trusted_pairs().collect();
    if trusted.len() < 2 {
        return Err(SpectraError::Validation(
            "need at least two trusted eigenvalues for the Weyl band".into(),
        ));
    }
    let mut beta1 = f64::INFINITY;
    let mut beta2 = f64::NEG_INFINITY;
    let hi = max_m.min(trusted.len() - 1);
    for m in 1..=hi {
        let ratio = trusted[m].lambda.re / (m * m) as f64;
        beta1 = beta1.min(ratio);
        beta2 = beta2.max(ratio);
    }
    Ok(WeylBand {
        beta1_sq: beta1,
        beta2_sq: beta2,
        samples: hi,
        pass: beta1 > 0.0 && beta2.is_finite(),
    })
}

/// Least-squares fit of log max_z ‖ψ_n(z)‖ against sqrt(|λ_n|), with a PASS
/// flag when no sample exceeds the fitted envelope by more than 10%.
#[derive(Clone, Debug)]
pub struct GrowthFit {
    pub c1: f64,
    pub c2: f64,
    /// Largest ratio of an observed maximum to the fitted envelope.
    pub max_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

pub fn growth_fit(decomp: &SpectralDecomposition, z_grid: &[Complex64]) -> Result<GrowthFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in decomp.trusted_pairs() {
        let mut peak = 0.0_f64;
        for &z in z_grid {
            peak = peak.max(pair.eigenfunction.value_norm(z)?);
        }
        if peak <= 0.0 {
            continue;
        }
        xs.push(pair.lambda.norm().sqrt());
        ys.push(peak.ln());
    }
    if xs.is_empty() {
        return Err(SpectraError::Validation(
            "growth fit needs at least one trusted eigenfunction".into(),
        ));
    }
    let n = xs.len() as f64;
    let (log_c1, c2) = if xs.len() == 1 {
        (ys[0], 0.0)
    } else {
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-300 {
            (sy / n, 0.0)
        } else {
            ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
        }
    };
    let mut max_ratio = 0.0_f64;
    for (x, y) in xs.iter().zip(&ys) {
        max_ratio = max_ratio.max((y - (log_c1 + c2 * x)).exp());
    }
    Ok(GrowthFit {
        c1: log_c1.exp(),
        c2,
        max_ratio,
        samples: xs.len(),
        pass: max_ratio <= 1.1,
    })
}

/// Default evaluation grid for growth fits: both boundary lines plus the
/// real axis, `nx` points each.
pub fn strip_sample_grid(domain: crate::hardy::StripDomain, nx: usize) -> Vec<Complex64> {
    let t = domain.half_height();
    let mut pts = Vec::with_capacity(3 * nx);
    for &tau in &[-t, 0.0, t] {
        for i in 0..nx {
            let x = 2.0 * std::f64::consts::PI * i as f64 / nx as f64;
            pts.push(Complex64::new(x, tau));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::{HardyFunction, StripDomain};
    use crate::operator::CoefficientMatrix;

    fn dom(t: f64) -> StripDomain {
        StripDomain::new(t).unwrap()
    }

    fn scalar_standard(
        domain: StripDomain,
        n: usize,
        a2: Option<&[(i64, f64)]>,
        a1: &[(i64, f64)],
        a0: &[(i64, f64)],
    ) -> PeriodicOperator {
        let build = |modes: &[(i64, f64)]| {
            let modes: Vec<(i64, Complex64)> = modes
                .iter()
                .map(|&(m, re)| (m, Complex64::new(re, 0.0)))
                .collect();
            CoefficientMatrix::scalar(HardyFunction::from_modes(domain, n, &modes).unwrap())
        };
        PeriodicOperator::new_standard(a2.map(build), build(a1), build(a0)).unwrap()
    }

    pub(crate) fn minus_d2(domain: StripDomain, n: usize, shift: f64) -> PeriodicOperator {
        scalar_standard(domain, n, Some(&[(0, -1.0)]), &[], &[(0, shift)])
    }

    pub(crate) fn mathieu(domain: StripDomain, n: usize, a: f64, shift: f64) -> PeriodicOperator {
        scalar_standard(
            domain,
            n,
            Some(&[(0, -1.0)]),
            &[],
            &[(2, a), (-2, a), (0, shift)],
        )
    }

    #[test]
    fn assemble_diagonal_operators() {
        let d = dom(0.5);
        let n = 6usize;
        let op = minus_d2(d, n, 0.0);
        let gal = assemble(&op, BasisKind::L2, n).unwrap();
        for m in -(n as i64)..=(n as i64) {
            let i = (m + n as i64) as usize;
            let want = Complex64::new((m * m) as f64, 0.0);
            assert!((gal.matrix()[(i, i)] - want).norm() < 1e-14);
        }

        let dee = scalar_standard(d, n, None, &[(0, 1.0)], &[]);
        let gal = assemble(&dee, BasisKind::L2, n).unwrap();
        for m in -(n as i64)..=(n as i64) {
            let i = (m + n as i64) as usize;
            assert!((gal.matrix()[(i, i)] - Complex64::new(0.0, m as f64)).norm() < 1e-14);
        }
    }

    #[test]
    fn assemble_mathieu_toeplitz_structure() {
        let d = dom(0.5);
        let n = 8usize;
        let op = mathieu(d, n, 1.0, 0.0);
        let gal = assemble(&op, BasisKind::L2, n).unwrap();
        let nt = n as i64;
        for m in -nt..=nt {
            for j in -nt..=nt {
                let e = gal.matrix()[((m + nt) as usize, (j + nt) as usize)];
                let want = if m == j {
                    Complex64::new((m * m) as f64, 0.0)
                } else if (m - j).abs() == 2 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((e - want).norm() < 1e-14, "entry ({m},{j})");
            }
        }
    }

    #[test]
    fn diag_spectrum_with_multiplicities() {
        let d = dom(0.5);
        let op = minus_d2(d, 16, 0.0);
        let gal = assemble(&op, BasisKind::L2, 16).unwrap();
        let dec = spectrum(&gal, 9).unwrap();
        let want = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0, 16.0];
        assert_eq!(dec.pairs.len(), 9);
        for (pair, w) in dec.pairs.iter().zip(want) {
            assert!((pair.lambda - Complex64::new(w, 0.0)).norm() < 1e-10);
            assert!(pair.residual < 1e-10);
        }
        // The double eigenvalues are reported as clusters of size 2.
        assert_eq!(dec.pairs[1].multiplicity, 2);
        assert_eq!(dec.pairs[0].multiplicity, 1);
        // Cluster eigenvectors span {e^{iz}, e^{-iz}} orthonormally.
        let p1 = &dec.pairs[1].eigenfunction;
        let p2 = &dec.pairs[2].eigenfunction;
        assert!(p1.l2_inner(p2).unwrap().norm() < 1e-8);
    }

    #[test]
    fn mathieu_ground_state_matches_reference_and_is_stable() {
        // Independent oracle: the same assembly at doubled truncation;
        // literature value for the lowest 2π-periodic eigenvalue of
        // −D² + 2cos(2x) is -0.45513860410.
        let d = dom(0.5);
        let lo = |n: usize| {
            let op = mathieu(d, n, 1.0, 0.0);
            let gal = assemble(&op, BasisKind::L2, n).unwrap();
            let dec = spectrum(&gal, 5).unwrap();
            dec.pairs
                .iter()
                .map(|p| p.lambda.re)
                .fold(f64::INFINITY, f64::min)
        };
        let l32 = lo(32);
        let l64 = lo(64);
        assert!((l32 - l64).abs() < 1e-10, "doubling drift {}", (l32 - l64).abs());
        assert!((l32 - (-0.45513860410)).abs() < 1e-9, "ground state {l32}");
    }

    #[test]
    fn cross_basis_spectra_agree() {
        let d = dom(0.5);
        let n = 32usize;
        let op = mathieu(d, n, 1.0, 0.0);
        let keep = 12;
        let dec_l2 = spectrum(&assemble(&op, BasisKind::L2, n).unwrap(), keep).unwrap();
        let dec_h2 = spectrum(&assemble(&op, BasisKind::H2, n).unwrap(), keep).unwrap();
        for (a, b) in dec_l2.pairs.iter().zip(&dec_h2.pairs) {
            assert!(
                (a.lambda - b.lambda).norm() < 1e-8,
                "l2 {} vs h2 {}",
                a.lambda,
                b.lambda
            );
        }
    }

    #[test]
    fn residual_decays_under_doubling() {
        let d = dom(0.5);
        let resid = |n: usize| {
            let op = mathieu(d, n, 1.0, 0.0);
            let gal = assemble(&op, BasisKind::L2, n).unwrap();
            let dec = spectrum(&gal, 4).unwrap();
            dec.pairs[3].residual
        };
        let r8 = resid(8);
        let r16 = resid(16);
        assert!(r16 <= r8 + 1e-14, "r8 = {r8:e}, r16 = {r16:e}");
    }

    #[test]
    fn hermitian_spectra_are_real_and_orthogonal() {
        let d = dom(0.5);
        let n = 24usize;
        let op = mathieu(d, n, 1.0, 1.0);
        assert!(op.selfadjoint_defect(n).unwrap().defect < 1e-14);
        let dec = spectrum(&assemble(&op, BasisKind::L2, n).unwrap(), 16).unwrap();
        for p in &dec.pairs {
            assert!(p.lambda.im.abs() < 1e-10);
        }
        for i in 0..dec.pairs.len() {
            for j in 0..i {
                let ip = dec.pairs[i]
                    .eigenfunction
                    .l2_inner(&dec.pairs[j].eigenfunction)
                    .unwrap();
                assert!(ip.norm() < 1e-8, "pairs {i},{j}: {}", ip.norm());
            }
        }
    }

    #[test]
    fn weyl_band_for_shifted_laplacian() {
        let d = dom(0.5);
        let n = 48usize;
        let op = minus_d2(d, n, 1.0);
        let dec = spectrum(&assemble(&op, BasisKind::L2, n).unwrap(), 41).unwrap();
        let band = weyl_bounds(&dec, 40).unwrap();
        assert!(band.pass);
        assert!(band.beta1_sq >= 0.24, "beta1² = {}", band.beta1_sq);
        assert!(band.beta2_sq <= 2.1, "beta2² = {}", band.beta2_sq);

        // Scaling the operator by 4 scales the band by 4.
        let op4 = scalar_standard(d, n, Some(&[(0, -4.0)]), &[], &[(0, 4.0)]);
        let dec4 = spectrum(&assemble(&op4, BasisKind::L2, n).unwrap(), 41).unwrap();
        let band4 = weyl_bounds(&dec4, 40).unwrap();
        assert!((band4.beta1_sq / band.beta1_sq - 4.0).abs() < 1e-6);
        assert!((band4.beta2_sq / band.beta2_sq - 4.0).abs() < 1e-6);
    }

    #[test]
    fn weyl_band_divergence_operator() {
        let d = dom(0.3);
        let n = 48usize;
        let half = Complex64::new(0.5, 0.0);
        let p2 = CoefficientMatrix::scalar(
            HardyFunction::from_modes(d, n, &[(0, Complex64::new(2.0, 0.0)), (1, half), (-1, half)])
                .unwrap(),
        );
        let zero = CoefficientMatrix::scalar(HardyFunction::zero(d, n).unwrap());
        let one = CoefficientMatrix::scalar(
            HardyFunction::constant(d, n, Complex64::new(1.0, 0.0)).unwrap(),
        );
        let op = PeriodicOperator::new_divergence(p2, zero, one).unwrap();
        let dec = spectrum(&assemble(&op, BasisKind::L2, n).unwrap(), 41).unwrap();
        let band = weyl_bounds(&dec, 40).unwrap();
        assert!(band.pass, "band = [{}, {}]", band.beta1_sq, band.beta2_sq);
        assert!(band.beta1_sq > 0.0 && band.beta2_sq.is_finite());
    }

    #[test]
    fn growth_fit_recovers_strip_height_for_laplacian() {
        // For −D² the eigenfunctions are unit exponentials whose strip
        // maximum is e^{|n|T} = e^{T sqrt(λ)}, so the fitted slope is T.
        let d = dom(0.5);
        let n = 32usize;
        let op = minus_d2(d, n, 0.0);
        let dec = spectrum(&assemble(&op, BasisKind::L2, n).unwrap(), 21).unwrap();
        let grid = strip_sample_grid(d, 64);
        let fit = growth_fit(&dec, &grid).unwrap();
        assert!(fit.pass, "max ratio {}", fit.max_ratio);
        assert!((fit.c2 - 0.5).abs() < 1e-6, "slope {}", fit.c2);
        assert!((fit.c1 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn growth_fit_single_sample_interpolates() {
        let d = dom(0.5);
        let n = 8usize;
        let op = minus_d2(d, n, 1.0);
        let gal = assemble(&op, BasisKind::L2, n).unwrap();
        let dec = spectrum(&gal, 1).unwrap();
        let grid = strip_sample_grid(d, 32);
        let fit = growth_fit(&dec, &grid).unwrap();
        assert_eq!(fit.samples, 1);
        assert!((fit.max_ratio - 1.0).abs() < 1e-12);
        assert!(fit.pass);
    }

    #[test]
    fn size_cap_is_enforced() {
        let d = dom(0.01);
        let op = minus_d2(d, 3000, 0.0);
        assert!(matches!(
            assemble(&op, BasisKind::L2, 3000),
            Err(SpectraError::SizeCap(_, _))
        ));
    }
}
