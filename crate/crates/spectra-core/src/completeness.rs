//! Conformal change of variables for first-order operators p₁(z)D, the
//! search for strip points that the eigenfunctions e^{inw(z)} fail to
//! separate, the height-threshold scan for that failure, and quantitative
//! span-residual tables measuring how well an eigenfunction family spans
//! the strip Hardy space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SpectraError};
use crate::hardy::{HardyFunction, StripDomain, VectorHardyFunction};
use crate::linalg;
use crate::numeric::{gauss_legendre, modified_bessel_i};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Conformal map
// ---------------------------------------------------------------------------

/// The normalized primitive w(z) = C₁ ∫₀^z ds / p₁(s) with
/// C₁ = 2π / ∫₀^{2π} ds / p₁(s), so that w(z + 2π) = w(z) + 2π.
#[derive(Clone, Debug)]
pub struct ConformalMap {
    p1: HardyFunction,
    c1: Complex64,
}

#[derive(Clone, Debug)]
pub struct InjectivityCertificate {
    /// min over the sampled closed strip of Re(1/p₁).
    pub min_re_inv: f64,
    pub argmin: Complex64,
    pub certified: bool,
}

impl ConformalMap {
    /// Build the map, rejecting coefficient functions that vanish anywhere
    /// on the sampled closed strip.
    pub fn build(p1: HardyFunction) -> Result<Self> {
        let t = p1.domain().half_height();
        let mut max_abs = 0.0_f64;
        let mut min_abs = f64::INFINITY;
        let mut argmin = Complex64::new(0.0, 0.0);
        for j in 0..33 {
            let tau = -t + 2.0 * t * j as f64 / 32.0;
            for i in 0..256 {
                let x = TWO_PI * i as f64 / 256.0;
                let v = p1.evaluate_closed(Complex64::new(x, tau))?.norm();
                max_abs = max_abs.max(v);
                if v < min_abs {
                    min_abs = v;
                    argmin = Complex64::new(x, tau);
                }
            }
        }
        if min_abs < 1e-10 * max_abs {
            return Err(SpectraError::ZeroOnPath { z: argmin });
        }
        // Period integral of 1/p₁ on the real axis (trapezoid on a periodic
        // integrand is spectrally accurate).
        let q = (8 * p1.n_trunc()).max(1024);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..q {
            let x = TWO_PI * j as f64 / q as f64;
            acc += 1.0 / p1.evaluate_closed(Complex64::new(x, 0.0))?;
        }
        let integral = acc * TWO_PI / q as f64;
        let c1 = Complex64::new(TWO_PI, 0.0) / integral;
        Ok(Self { p1, c1 })
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn p1(&self) -> &HardyFunction {
        &self.p1
    }

    pub fn domain(&self) -> StripDomain {
        self.p1.domain()
    }

    /// w(z) by quadrature along the straight segment from 0.
    pub fn w(&self, z: Complex64) -> Result<Complex64> {
        self.w_increment(Complex64::new(0.0, 0.0), z)
    }

    /// ∫ over the straight segment from `from` to `to` of C₁/p₁, by
    /// composite Gauss-Legendre panels short enough for the integrand's
    /// O(1) variation scale.
    pub fn w_increment(&self, from: Complex64, to: Complex64) -> Result<Complex64> {
        let len = (to - from).norm();
        if len == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let panels = (len / 0.15).ceil() as usize + 1;
        let (nodes, weights) = gauss_legendre(16);
        let dz = (to - from) / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = from + dz * (p as f64 + 0.5);
            let half = dz * 0.5;
            for (x, w) in nodes.iter().zip(weights.iter()) {
                acc += self.c1 / self.p1.evaluate_closed(mid + half * *x)? * *w;
            }
        }
        let val = acc * (to - from) / (2.0 * panels as f64);
        if !val.re.is_finite() || !val.im.is_finite() {
            return Err(SpectraError::ZeroOnPath { z: to });
        }
        Ok(val)
    }

    pub fn w_prime(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.c1 / self.p1.evaluate_closed(z)?)
    }

    /// |w(z + 2π) − w(z) − 2π| sampled at a few base points.
    pub fn periodicity_defect(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        let t = self.domain().half_height();
        for &z in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.3, 0.4 * t),
            Complex64::new(4.0, -0.7 * t),
        ] {
            let a = self.w(z)?;
            let b = self.w(z + TWO_PI)?;
            worst = worst.max((b - a - TWO_PI).norm());
        }
        Ok(worst)
    }

    /// Positive real part of 1/p₁ over the whole sampled strip certifies
    /// injectivity of w on the strip.
    pub fn injectivity_certificate(&self, nx: usize, ny: usize) -> Result<InjectivityCertificate> {
        let t = self.domain().half_height();
        let mut min_re = f64::INFINITY;
        let mut argmin = Complex64::new(0.0, 0.0);
        for j in 0..ny {
            let tau = if ny == 1 {
                0.0
            } else {
                -t + 2.0 * t * j as f64 / (ny - 1) as f64
            };
            for i in 0..nx {
                let x = TWO_PI * i as f64 / nx as f64;
                let z = Complex64::new(x, tau);
                let re = (1.0 / self.p1.evaluate_closed(z)?).re;
                if re < min_re {
                    min_re = re;
                    argmin = z;
                }
            }
        }
        Ok(InjectivityCertificate {
            min_re_inv: min_re,
            argmin,
            certified: min_re > 0.0,
        })
    }

    /// w on the grid x_i = 2πi/nx, τ_j = t_search·j/ny for j = -ny..ny,
    /// computed by cumulative Gauss-Legendre panels (real axis first, then
    /// vertical columns). Row index j + ny, column index i.
    pub fn grid_w(&self, t_search: f64, nx: usize, ny: usize) -> Result<Vec<Vec<Complex64>>> {
        let t = self.domain().half_height();
        if t_search > t * (1.0 + 1e-12) {
            return Err(SpectraError::Validation(format!(
                "search height {t_search} exceeds the coefficient strip {t}"
            )));
        }
        let (nodes, weights) = gauss_legendre(8);
        let step_integral = |a: Complex64, b: Complex64| -> Result<Complex64> {
            let mid = (a + b) * 0.5;
            let half = (b - a) * 0.5;
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, w) in nodes.iter().zip(weights.iter()) {
                acc += self.c1 / self.p1.evaluate_closed(mid + half * *x)? * *w;
            }
            Ok(acc * half)
        };
        // Real-axis row.
        let mut base = vec![Complex64::new(0.0, 0.0); nx];
        for i in 1..nx {
            let a = Complex64::new(TWO_PI * (i - 1) as f64 / nx as f64, 0.0);
            let b = Complex64::new(TWO_PI * i as f64 / nx as f64, 0.0);
            base[i] = base[i - 1] + step_integral(a, b)?;
        }
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); nx]; 2 * ny + 1];
        rows[ny] = base;
        for dir in [1i64, -1i64] {
            for j in 1..=(ny as i64) {
                let tau_prev = t_search * (dir * (j - 1)) as f64 / ny as f64;
                let tau = t_search * (dir * j) as f64 / ny as f64;
                let prev_row = rows[(ny as i64 + dir * (j - 1)) as usize].clone();
                let row = &mut rows[(ny as i64 + dir * j) as usize];
                for i in 0..nx {
                    let x = TWO_PI * i as f64 / nx as f64;
                    let a = Complex64::new(x, tau_prev);
                    let b = Complex64::new(x, tau);
                    row[i] = prev_row[i] + step_integral(a, b)?;
                }
            }
        }
        Ok(rows)
    }
}

// ---------------------------------------------------------------------------
// Collision search
// ---------------------------------------------------------------------------

/// A pair of fundamental-domain points with w(z₁) − w(z₂) ∈ 2πZ, so that
/// every eigenfunction e^{inw} takes the same value at both.
#[derive(Clone, Debug)]
pub struct CollisionWitness {
    pub z1: Complex64,
    pub z2: Complex64,
    /// The integer shift: w(z₁) − w(z₂) = 2πk.
    pub k: i64,
    /// |w(z₁) − w(z₂) − 2πk| after polishing.
    pub residual: f64,
    /// Common level |Im w| at the witness pair.
    pub im_w: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CollisionSearchParams {
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub polish_tol: f64,
    /// Pairs closer than this (mod 2π) are rejected as self-matches.
    pub min_separation: f64,
    /// Anchors are restricted to grid points with |Im w| below this cap so
    /// the witness stays verifiable in double precision.
    pub anchor_im_w_cap: f64,
    pub max_seeds: usize,
}

impl Default for CollisionSearchParams {
    fn default() -> Self {
        Self {
            grid_nx: 256,
            grid_ny: 64,
            polish_tol: 1e-10,
            min_separation: 0.05,
            anchor_im_w_cap: 0.05,
            max_seeds: 48,
        }
    }
}

fn wrap_mod_2pi(x: f64) -> f64 {
    let mut y = x % TWO_PI;
    if y < 0.0 {
        y += TWO_PI;
    }
    y
}

/// Distance between two strip points modulo horizontal 2π translations.
fn separation_mod_2pi(a: Complex64, b: Complex64) -> f64 {
    let mut dx = (a.re - b.re) % TWO_PI;
    if dx > std::f64::consts::PI {
        dx -= TWO_PI;
    }
    if dx < -std::f64::consts::PI {
        dx += TWO_PI;
    }
    (Complex64::new(dx, a.im - b.im)).norm()
}

/// Search the fundamental domain {0 <= Re z < 2π, |Im z| <= t_search} for a
/// collision pair. Grid seeds minimizing |w(z₁) − w(z₂) − 2πk| are polished
/// by Newton iteration in z₂ with z₁ held fixed (the anchor constraint).
/// Absence of a witness is a legitimate outcome and returns None.
pub fn collision_search(
    map: &ConformalMap,
    t_search: f64,
    params: CollisionSearchParams,
) -> Result<Option<CollisionWitness>> {
    let rows = map.grid_w(t_search, params.grid_nx, params.grid_ny)?;
    let ny = params.grid_ny as i64;

    // Candidate points where |Im w| is small enough for a certifiable
    // witness; collect (z, w).
    let mut candidates: Vec<(Complex64, Complex64)> = Vec::new();
    for (jr, row) in rows.iter().enumerate() {
        let tau = t_search * (jr as i64 - ny) as f64 / ny as f64;
        for (i, &w) in row.iter().enumerate() {
            if w.im.abs() <= params.anchor_im_w_cap {
                let x = TWO_PI * i as f64 / params.grid_nx as f64;
                candidates.push((Complex64::new(x, tau), w));
            }
        }
    }
    if candidates.len() < 2 {
        return Ok(None);
    }

    // Sort by Re w mod 2π and examine neighboring pairs.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        wrap_mod_2pi(candidates[a].1.re)
            .partial_cmp(&wrap_mod_2pi(candidates[b].1.re))
            .unwrap()
    });
    #[derive(Clone, Copy)]
    struct Seed {
        i: usize,
        j: usize,
        mismatch: f64,
    }
    let mut seeds: Vec<Seed> = Vec::new();
    let m = order.len();
    for a in 0..m {
        for off in 1..=3usize {
            let b = (a + off) % m;
            if a == b {
                continue;
            }
            let (zi, wi) = candidates[order[a]];
            let (zj, wj) = candidates[order[b]];
            if separation_mod_2pi(zi, zj) < params.min_separation {
                continue;
            }
            let k = ((wi - wj).re / TWO_PI).round();
            if k.abs() > 2.0 {
                continue;
            }
            let mismatch = (wi - wj - Complex64::new(TWO_PI * k, 0.0)).norm();
            seeds.push(Seed {
                i: order[a],
                j: order[b],
                mismatch,
            });
        }
    }
    seeds.sort_by(|s, t| {
        s.mismatch
            .partial_cmp(&t.mismatch)
            .unwrap()
            .then(s.i.cmp(&t.i))
            .then(s.j.cmp(&t.j))
    });
    seeds.truncate(params.max_seeds);

    for seed in seeds {
        let (z1, w1) = candidates[seed.i];
        let (z2_seed, w2_seed) = candidates[seed.j];
        let k = ((w1 - w2_seed).re / TWO_PI).round() as i64;
        let target = w1 - Complex64::new(TWO_PI * k as f64, 0.0);
        // Newton in z₂ for w(z₂) = w(z₁) − 2πk, tracking w incrementally
        // from the grid value instead of re-integrating from the origin.
        let mut z2 = z2_seed;
        let mut w_z2 = w2_seed;
        let mut ok = true;
        for _ in 0..60 {
            let err = w_z2 - target;
            if err.norm() < params.polish_tol * 1e-2 {
                break;
            }
            let deriv = map.w_prime(z2)?;
            if deriv.norm() == 0.0 {
                ok = false;
                break;
            }
            let step = err / deriv;
            let z_next = z2 - step;
            if z_next.im.abs() > t_search || !z_next.re.is_finite() {
                ok = false;
                break;
            }
            w_z2 += map.w_increment(z2, z_next)?;
            z2 = z_next;
            if step.norm() < 1e-15 * (1.0 + z2.norm()) {
                break;
            }
        }
        if !ok {
            continue;
        }
        let converged = (map.w(z2)? - target).norm() < params.polish_tol
            && z2.im.abs() <= t_search;
        if !converged {
            continue;
        }
        // Translate z₂ into the fundamental domain, adjusting k.
        let shift = (z2.re / TWO_PI).floor();
        let z2 = z2 - Complex64::new(TWO_PI * shift, 0.0);
        let k = k + shift as i64;
        if k.abs() > 2 {
            continue;
        }
        if separation_mod_2pi(z1, z2) < params.min_separation {
            continue;
        }
        let w2 = map.w(z2)?;
        let residual = (w1 - w2 - Complex64::new(TWO_PI * k as f64, 0.0)).norm();
        if residual >= params.polish_tol {
            continue;
        }
        return Ok(Some(CollisionWitness {
            z1,
            z2,
            k,
            residual,
            im_w: w1.im.abs().max(w2.im.abs()),
        }));
    }
    Ok(None)
}

/// max over |n| <= n_max of |e^{inw(z₁)} − e^{inw(z₂)}| for a witness.
pub fn witness_nonseparation_error(
    map: &ConformalMap,
    witness: &CollisionWitness,
    n_max: i64,
) -> Result<f64> {
    let w1 = map.w(witness.z1)?;
    let w2 = map.w(witness.z2)?;
    let mut worst = 0.0_f64;
    for n in -n_max..=n_max {
        let a = (Complex64::i() * n as f64 * w1).exp();
        let b = (Complex64::i() * n as f64 * w2).exp();
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Threshold scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ThresholdScan {
    /// Smallest height at which a collision witness was found.
    pub t_star: Option<f64>,
    pub witness: Option<CollisionWitness>,
    /// (height, witness found) for every probed ladder point.
    pub coverage: Vec<(f64, bool)>,
}

/// Walk a monotone ladder of strip heights, then bisect between the last
/// height without a witness and the first with one.
pub fn threshold_scan<F>(
    family: F,
    t_min: f64,
    t_max: f64,
    steps: usize,
    params: CollisionSearchParams,
    bisection_iters: usize,
) -> Result<ThresholdScan>
where
    F: Fn(f64) -> Result<ConformalMap>,
{
    let mut coverage = Vec::new();
    let mut bracket: Option<(f64, f64, CollisionWitness)> = None;
    let mut last_none = t_min;
    for s in 0..steps {
        let t = if steps == 1 {
            t_min
        } else {
            t_min + (t_max - t_min) * s as f64 / (steps - 1) as f64
        };
        let map = family(t)?;
        let hit = collision_search(&map, t, params)?;
        coverage.push((t, hit.is_some()));
        match hit {
            Some(w) => {
                bracket = Some((last_none, t, w));
                break;
            }
            None => last_none = t,
        }
    }
    let Some((mut lo, mut hi, mut witness)) = bracket else {
        return Ok(ThresholdScan {
            t_star: None,
            witness: None,
            coverage,
        });
    };
    for _ in 0..bisection_iters {
        let mid = 0.5 * (lo + hi);
        let map = family(mid)?;
        match collision_search(&map, mid, params)? {
            Some(w) => {
                hi = mid;
                witness = w;
                coverage.push((mid, true));
            }
            None => {
                lo = mid;
                coverage.push((mid, false));
            }
        }
    }
    Ok(ThresholdScan {
        t_star: Some(hi),
        witness: Some(witness),
        coverage,
    })
}

// ---------------------------------------------------------------------------
// Coefficient families
// ---------------------------------------------------------------------------

/// The entire coefficient family p(z) = C₁ e^{a cos z} with
/// C₁ = (1/2π)∫ e^{−a cos x} dx = I₀(a), which normalizes ∫ 1/p to 2π.
/// Fourier coefficients are C₁ I_n(a); the truncation order is chosen so
/// the weighted tail at the requested strip height is below 1e-13.
#[derive(Clone, Copy, Debug)]
pub struct ExpCosFamily {
    pub a: f64,
}

impl ExpCosFamily {
    pub fn p1(&self, t: f64) -> Result<HardyFunction> {
        let domain = StripDomain::new(t)?;
        let c1 = modified_bessel_i(0, self.a);
        // Smallest truncation with a negligible tail relative to the
        // smallest values of p on the strip.
        let floor = 1e-13 * (-self.a * t.cosh()).exp();
        let cap = (crate::hardy::WEIGHT_EXPONENT_CAP / (2.0 * t)).floor() as usize;
        let mut n_trunc = None;
        for n in 4..=cap {
            let tail = modified_bessel_i(n as u32, self.a) * (n as f64 * t).exp();
            if tail < floor {
                n_trunc = Some(n);
                break;
            }
        }
        let Some(n) = n_trunc else {
            return Err(SpectraError::WeightOverflow { n: cap as i64, t });
        };
        let modes: Vec<(i64, Complex64)> = (-(n as i64)..=n as i64)
            .map(|m| {
                let v = c1 * modified_bessel_i(m.unsigned_abs() as u32, self.a);
                (m, Complex64::new(v, 0.0))
            })
            .collect();
        HardyFunction::from_modes(domain, n, &modes)
    }

    pub fn map(&self, t: f64) -> Result<ConformalMap> {
        ConformalMap::build(self.p1(t)?)
    }
}

// ---------------------------------------------------------------------------
// Span residuals
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ResidualTable {
    /// r[j][m] = distance from test j to the span of the first m+1 functions.
    pub residuals: Vec<Vec<f64>>,
    /// Test norms ‖t_j‖_H.
    pub test_norms: Vec<f64>,
    /// Effective Gram rank at each m.
    pub effective_rank: Vec<usize>,
}

/// H²-distance from each test function to the span of ψ₁..ψ_M through the
/// Gram system, for every prefix M. The Gram matrix is normalized and
/// pseudo-inverted with a spectral cutoff.
pub fn span_residuals(
    eigfns: &[VectorHardyFunction],
    tests: &[VectorHardyFunction],
    cutoff: f64,
) -> Result<ResidualTable> {
    if eigfns.is_empty() {
        return Err(SpectraError::Validation("empty eigenfunction list".into()));
    }
    let m_max = eigfns.len();
    let norms: Vec<f64> = eigfns.iter().map(|f| f.h_norm()).collect();
    if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
        return Err(SpectraError::Validation(
            "eigenfunction with zero or non-finite norm".into(),
        ));
    }
    let mut gram = DMatrix::from_element(m_max, m_max, Complex64::new(0.0, 0.0));
    for i in 0..m_max {
        for k in 0..m_max {
            gram[(i, k)] = eigfns[i].h_inner(&eigfns[k])? / (norms[i] * norms[k]);
        }
    }
    let test_norms: Vec<f64> = tests.iter().map(|t| t.h_norm()).collect();
    let mut b_all = DMatrix::from_element(m_max, tests.len(), Complex64::new(0.0, 0.0));
    for (j, t) in tests.iter().enumerate() {
        for i in 0..m_max {
            // b_i = <t, psi_i>_H with the normalized family.
            b_all[(i, j)] = t.h_inner(&eigfns[i])? / norms[i];
        }
    }

    // Residuals from the explicit residual function t − Σ xᵢ ψ̂ᵢ rather than
    // the norm-squared subtraction, which floors out near sqrt(ε)‖t‖.
    let mut residuals = vec![vec![0.0; m_max]; tests.len()];
    let mut effective_rank = vec![0usize; m_max];
    for m in 1..=m_max {
        let g = gram.view((0, 0), (m, m)).clone_owned();
        for (j, t) in tests.iter().enumerate() {
            let b = DVector::from_fn(m, |i, _| b_all[(i, j)]);
            let (x, rank) = linalg::pseudo_solve(&g, &b, cutoff)?;
            effective_rank[m - 1] = rank;
            let mut resid = t.clone();
            for i in 0..m {
                let factor = -x[i] / Complex64::new(norms[i], 0.0);
                resid = resid.add(&eigfns[i].scaled(factor))?;
            }
            residuals[j][m - 1] = resid.h_norm();
        }
    }
    Ok(ResidualTable {
        residuals,
        test_norms,
        effective_rank,
    })
}

fn residual_prefixes(
    gram: &DMatrix<Complex64>,
    b_all: &DMatrix<Complex64>,
    test_norms: &[f64],
    cutoff: f64,
) -> Result<ResidualTable> {
    let m_max = gram.nrows();
    let n_tests = b_all.ncols();
    let mut residuals = vec![vec![0.0; m_max]; n_tests];
    let mut effective_rank = vec![0usize; m_max];
    for m in 1..=m_max {
        let g = gram.view((0, 0), (m, m)).clone_owned();
        let mut rank_here = 0;
        for (j, norm_t) in test_norms.iter().enumerate() {
            let b = DVector::from_fn(m, |i, _| b_all[(i, j)]);
            let (x, rank) = linalg::pseudo_solve(&g, &b, cutoff)?;
            rank_here = rank;
            let reduction = b
                .iter()
                .zip(x.iter())
                .map(|(bi, xi)| (bi.conj() * xi).re)
                .sum::<f64>();
            let r_sq = (norm_t * norm_t - reduction).max(0.0);
            residuals[j][m - 1] = r_sq.sqrt();
        }
        effective_rank[m - 1] = rank_here;
    }
    Ok(ResidualTable {
        residuals,
        test_norms: test_norms.to_vec(),
        effective_rank,
    })
}

// ---------------------------------------------------------------------------
// First-order family residuals via boundary quadrature
// ---------------------------------------------------------------------------

/// Eigenfunctions e^{inw(z)} of p₁(z)D ordered by |n|: 0, 1, -1, 2, -2, ...
pub fn first_order_mode_list(count: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 0i64;
    while out.len() < count {
        out.push(n);
        if n > 0 {
            out.push(-n);
        }
        n += 1;
    }
    out.truncate(count);
    out
}

/// Span residuals of the closed-form family ψ_n = e^{inw(z)} against
/// reproducing-kernel difference tests h = g_{v₁} − g_{v₂}.
///
/// The family grows like e^{|n| max|Im w|} across the strip, far beyond what
/// truncated coefficient arrays can normalize in double precision, so inner
/// products are taken directly on the boundary: each ψ_n is rescaled by its
/// boundary maximum, the Gram matrix comes from trapezoid quadrature of the
/// two boundary lines, and the kernel pairings use the evaluation identity
/// <ψ, g_v> = ψ(v) with the kernel series summed to convergence.
pub fn first_order_span_residuals(
    map: &ConformalMap,
    orders: &[i64],
    kernel_pairs: &[(Complex64, Complex64)],
    quad_points: usize,
    cutoff: f64,
) -> Result<ResidualTable> {
    let t = map.domain().half_height();
    let m_max = orders.len();
    let q = quad_points;

    // w on both boundary lines, cumulative from w(±iT).
    let mut boundary_w: Vec<Vec<Complex64>> = Vec::with_capacity(2);
    for &sign in &[1.0_f64, -1.0] {
        let corner = map.w(Complex64::new(0.0, sign * t))?;
        let (nodes, weights) = gauss_legendre(8);
        let mut vals = Vec::with_capacity(q);
        let mut acc = corner;
        vals.push(acc);
        for j in 1..q {
            let a = Complex64::new(TWO_PI * (j - 1) as f64 / q as f64, sign * t);
            let b = Complex64::new(TWO_PI * j as f64 / q as f64, sign * t);
            let mid = (a + b) * 0.5;
            let half = (b - a) * 0.5;
            let mut seg = Complex64::new(0.0, 0.0);
            for (x, wq) in nodes.iter().zip(weights.iter()) {
                seg += map.c1 / map.p1.evaluate_closed(mid + half * *x)? * *wq;
            }
            acc += seg * half;
            vals.push(acc);
        }
        boundary_w.push(vals);
    }

    // Scaled boundary values of each ψ_n: exp(i n w − κ_n) with
    // κ_n = max over the boundary of Re(i n w) = max(−n Im w).
    let mut kappas = Vec::with_capacity(m_max);
    let mut values: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
    for &n in orders {
        let nf = n as f64;
        let mut kappa = f64::NEG_INFINITY;
        for line in &boundary_w {
            for wv in line {
                kappa = kappa.max(-nf * wv.im);
            }
        }
        let mut vals = Vec::with_capacity(2 * q);
        for line in &boundary_w {
            for wv in line {
                let exponent = Complex64::i() * nf * wv - Complex64::new(kappa, 0.0);
                vals.push(exponent.exp());
            }
        }
        kappas.push(kappa);
        values.push(vals);
    }

    // Gram of the scaled family via the boundary trapezoid rule.
    let mut gram_scaled = DMatrix::from_element(m_max, m_max, Complex64::new(0.0, 0.0));
    for i in 0..m_max {
        for k in 0..=i {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in values[i].iter().zip(values[k].iter()) {
                acc += a * b.conj();
            }
            let v = acc / (2.0 * q as f64);
            gram_scaled[(i, k)] = v;
            gram_scaled[(k, i)] = v.conj();
        }
    }
    let norms_scaled: Vec<f64> = (0..m_max).map(|i| gram_scaled[(i, i)].re.sqrt()).collect();
    let mut gram = DMatrix::from_element(m_max, m_max, Complex64::new(0.0, 0.0));
    for i in 0..m_max {
        for k in 0..m_max {
            gram[(i, k)] = gram_scaled[(i, k)] / (norms_scaled[i] * norms_scaled[k]);
        }
    }

    // Kernel-difference tests: pairings via the evaluation identity.
    let kernel_inner = |v: Complex64, w: Complex64| -> f64 {
        // <g_w, g_v>_H = Σ conj(e^{inw}) e^{inv} / cosh(2nT); summed to
        // convergence (real part; the total norm combination is real).
        let mut acc = Complex64::new(0.0, 0.0);
        let dom = map.domain();
        for n in 0..4000i64 {
            let mut term = Complex64::new(0.0, 0.0);
            let signs: &[i64] = if n == 0 { &[0] } else { &[1, -1] };
            for &s in signs {
                let m = s * n;
                let e = (Complex64::i() * m as f64 * (v - w.conj())).exp();
                term += e / dom.weight(m);
            }
            acc += term;
            if n > 4 && term.norm() < 1e-18 * acc.norm().max(1.0) {
                break;
            }
        }
        acc.re
    };

    let mut test_norms = Vec::with_capacity(kernel_pairs.len());
    let mut b_all = DMatrix::from_element(m_max, kernel_pairs.len(), Complex64::new(0.0, 0.0));
    for (j, &(v1, v2)) in kernel_pairs.iter().enumerate() {
        let norm_sq =
            kernel_inner(v1, v1) - 2.0 * kernel_inner(v1, v2) + kernel_inner(v2, v2);
        test_norms.push(norm_sq.max(0.0).sqrt());
        let w1 = map.w(v1)?;
        let w2 = map.w(v2)?;
        for (i, &n) in orders.iter().enumerate() {
            let nf = n as f64;
            // <h, ψ_n> = conj(ψ_n(v1) − ψ_n(v2)), with the same scaling and
            // normalization as the Gram matrix.
            let a = (Complex64::i() * nf * w1 - Complex64::new(kappas[i], 0.0)).exp();
            let b = (Complex64::i() * nf * w2 - Complex64::new(kappas[i], 0.0)).exp();
            b_all[(i, j)] = (a - b).conj() / norms_scaled[i];
        }
    }
    residual_prefixes(&gram, &b_all, &test_norms, cutoff)
}

// ---------------------------------------------------------------------------
// Similarity example
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimilarityReport {
    pub max_sin_angle: f64,
    pub max_eigenvalue_error: f64,
    pub modes: Vec<i64>,
}

/// Compare the computed eigenfunctions of D − iφ'(z) with the closed forms
/// e^{iφ(z)} e^{inz}: the spectrum is {in} and the similarity holds on any
/// strip, so both the eigenvalue error and the subspace angle must vanish
/// within discretization accuracy.
pub fn similarity_example_check(
    phi: &HardyFunction,
    n_range: i64,
    n_galerkin: usize,
) -> Result<SimilarityReport> {
    use crate::galerkin::{assemble, spectrum, BasisKind};
    use crate::operator::{CoefficientMatrix, PeriodicOperator};

    let domain = phi.domain();
    let a1 = CoefficientMatrix::scalar(HardyFunction::constant(
        domain,
        n_galerkin,
        Complex64::new(1.0, 0.0),
    )?);
    let a0 = CoefficientMatrix::scalar(
        phi.derivative()
            .truncated(n_galerkin)
            .scaled(Complex64::new(0.0, -1.0)),
    );
    let op = PeriodicOperator::new_standard(None, a1, a0)?;
    let gal = assemble(&op, BasisKind::H2, n_galerkin)?;
    let keep = (2 * n_range as usize + 5).min(gal.size());
    let dec = spectrum(&gal, keep)?;

    // Closed-form eigenfunctions from real-axis samples of e^{iφ(x)} e^{inx}.
    let q = 4 * n_galerkin + 4;
    let phi_samples: Vec<Complex64> = (0..q)
        .map(|j| {
            let x = TWO_PI * j as f64 / q as f64;
            phi.evaluate_closed(Complex64::new(x, 0.0)).unwrap()
        })
        .collect();

    let mut max_sin = 0.0_f64;
    let mut max_eig_err = 0.0_f64;
    let mut modes = Vec::new();
    for n in -n_range..=n_range {
        let target = Complex64::new(0.0, n as f64);
        let pair = dec
            .pairs
            .iter()
            .min_by(|a, b| {
                (a.lambda - target)
                    .norm()
                    .partial_cmp(&(b.lambda - target).norm())
                    .unwrap()
            })
            .ok_or_else(|| SpectraError::Validation("empty spectrum".into()))?;
        max_eig_err = max_eig_err.max((pair.lambda - target).norm());

        let samples: Vec<Complex64> = phi_samples
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let x = TWO_PI * j as f64 / q as f64;
                (Complex64::i() * (p + Complex64::new(n as f64 * x, 0.0))).exp()
            })
            .collect();
        let closed = HardyFunction::from_real_samples(&samples, domain, n_galerkin)?;
        // Angle in H² between the computed eigenfunction and the closed form.
        let computed = &pair.eigenfunction;
        let ip = computed.component(0).h_inner(&closed)?;
        let na = computed.h_norm();
        let nb = closed.h_norm();
        let cos_sq = (ip.norm() / (na * nb)).min(1.0);
        max_sin = max_sin.max((1.0 - cos_sq * cos_sq).max(0.0).sqrt());
        modes.push(n);
    }
    Ok(SimilarityReport {
        max_sin_angle: max_sin,
        max_eigenvalue_error: max_eig_err,
        modes,
    })
}
