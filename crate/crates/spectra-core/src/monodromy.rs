//! Transfer-matrix machinery for the first-order system attached to
//! LY = λY: adaptive complex-path integration of U' = A(z,λ)U, Floquet
//! determinants d(λ) = det(I - U(2π,λ)), an argument-principle eigenvalue
//! search over rectangles, and the variation-of-parameters periodic
//! resolvent. Everything here is independent of the Galerkin discretization
//! and serves as its cross-validation oracle.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SpectraError};
use crate::hardy::{HardyFunction, VectorHardyFunction};
use crate::linalg;
use crate::numeric::{gauss_legendre, spectral_norm, wrap_angle};
use crate::operator::{CoefficientMatrix, PeriodicOperator};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) for complex matrix states
// ---------------------------------------------------------------------------

/// Integrate Y' = f(t, Y) from t0 to t1 with the Dormand-Prince embedded
/// pair; the state is a dense complex matrix. Returns the final state and
/// the (step count, accumulated error estimate).
fn dopri5<F>(
    f: &F,
    y0: DMatrix<Complex64>,
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<(DMatrix<Complex64>, usize, f64)>
where
    F: Fn(f64, &DMatrix<Complex64>) -> Result<DMatrix<Complex64>>,
{
    #[rustfmt::skip]
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    // Difference between the 5th and embedded 4th order weights.
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0, 0, 0.0));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 64.0;
    let mut k1 = f(t, &y)?;
    let mut steps = 0usize;
    let mut err_acc = 0.0_f64;
    let h_min = span.abs() * 1e-14;

    while (t1 - t) * span.signum() > 0.0 {
        if h.abs() < h_min {
            return Err(SpectraError::StepUnderflow { t, h });
        }
        if (t + h - t1) * span.signum() > 0.0 {
            h = t1 - t;
        }
        let mut ks: Vec<DMatrix<Complex64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 0..6 {
            let mut arg = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    arg += kj * Complex64::new(a * h, 0.0);
                }
            }
            ks.push(f(t + C[stage] * h, &arg)?);
        }
        const B: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        let mut ynew = y.clone();
        for (j, kj) in ks.iter().enumerate() {
            if B[j] != 0.0 {
                ynew += kj * Complex64::new(B[j] * h, 0.0);
            }
        }
        // Embedded error estimate.
        let mut err_sq = 0.0_f64;
        let count = (y.nrows() * y.ncols()) as f64;
        for r in 0..y.nrows() {
            for c in 0..y.ncols() {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, kj) in ks.iter().enumerate() {
                    e += kj[(r, c)] * E[j];
                }
                let scale = atol + rtol * y[(r, c)].norm().max(ynew[(r, c)].norm());
                let ratio = (e.norm() * h.abs()) / scale;
                err_sq += ratio * ratio;
            }
        }
        let err = (err_sq / count).sqrt();
        if err <= 1.0 {
            t += h;
            y = ynew;
            // FSAL: stage 7 equals the derivative at the accepted point.
            k1 = ks.pop().unwrap();
            steps += 1;
            err_acc += err * (atol + rtol);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, steps, err_acc))
}

/// Same integrator, reporting the state at each requested checkpoint
/// (strictly increasing interior values of t).
fn dopri5_checkpoints<F>(
    f: &F,
    y0: DMatrix<Complex64>,
    t0: f64,
    checkpoints: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<DMatrix<Complex64>>>
where
    F: Fn(f64, &DMatrix<Complex64>) -> Result<DMatrix<Complex64>>,
{
    let mut states = Vec::with_capacity(checkpoints.len());
    let mut y = y0;
    let mut t = t0;
    for &tc in checkpoints {
        if tc > t {
            let (ynext, _, _) = dopri5(f, y, t, tc, rtol, atol)?;
            y = ynext;
            t = tc;
        }
        states.push(y.clone());
    }
    Ok(states)
}

// ---------------------------------------------------------------------------
// First-order system
// ---------------------------------------------------------------------------

/// Evaluator for the block companion matrix A(z, λ) of LY = λY.
///
/// Second order: u = (Y, Y') and
///   A = [[0, I], [-A₂⁻¹(A₀ - λ), -A₂⁻¹A₁]];
/// first order: A = A₁⁻¹(λ - A₀).
pub struct FirstOrderSystem {
    op: PeriodicOperator,
    lambda: Complex64,
    k: usize,
    dim: usize,
}

impl FirstOrderSystem {
    pub fn new(op: &PeriodicOperator, lambda: Complex64) -> Result<Self> {
        let std_form = op.to_standard()?;
        let k = std_form.k();
        let dim = k * std_form.order();
        Ok(Self {
            op: std_form,
            lambda,
            k,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn leading_inverse(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let lead = self.op.leading().evaluate(z)?;
        let det = lead.determinant().norm();
        lead.clone()
            .try_inverse()
            .ok_or(SpectraError::SingularLeading { z, det })
    }

    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let k = self.k;
        let a0 = self.op.zeroth().evaluate(z)?;
        if self.op.order() == 1 {
            let inv = self.leading_inverse(z)?;
            let mut m = -&a0;
            for i in 0..k {
                m[(i, i)] += self.lambda;
            }
            return Ok(inv * m);
        }
        let inv = self.leading_inverse(z)?;
        let a1 = self.op.first().evaluate(z)?;
        let mut lower_left = -&a0;
        for i in 0..k {
            lower_left[(i, i)] += self.lambda;
        }
        let lower_left = &inv * lower_left;
        let lower_right = -(&inv * a1);
        let mut m = DMatrix::from_element(2 * k, 2 * k, Complex64::new(0.0, 0.0));
        for i in 0..k {
            m[(i, k + i)] = Complex64::new(1.0, 0.0);
            for j in 0..k {
                m[(k + i, j)] = lower_left[(i, j)];
                m[(k + i, k + j)] = lower_right[(i, j)];
            }
        }
        Ok(m)
    }

    /// Forcing column F(z) for the nonhomogeneous problem (L - λ)Y = f.
    fn force(&self, z: Complex64, f: &VectorHardyFunction) -> Result<DVector<Complex64>> {
        let vals = DVector::from_vec(f.evaluate_closed(z)?);
        let inv = self.leading_inverse(z)?;
        let driven = inv * vals;
        let mut out = DVector::from_element(self.dim, Complex64::new(0.0, 0.0));
        let offset = self.dim - self.k;
        for i in 0..self.k {
            out[offset + i] = driven[i];
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

/// Integration tolerances for the transfer-matrix solves.
#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl IntegrationOptions {
    pub fn tight() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub u: DMatrix<Complex64>,
    pub endpoint: Complex64,
    pub lambda: Complex64,
    pub steps: usize,
    pub est_error: f64,
    /// log of the spectral norm of U.
    pub log_norm: f64,
    /// Straight-path envelope ∫₀¹ ‖A(sζ,λ)‖ |ζ| ds.
    pub gronwall_log_bound: f64,
}

impl TransferMatrix {
    pub fn gronwall_ok(&self, slack: f64) -> bool {
        self.log_norm <= self.gronwall_log_bound + slack
    }
}

/// Solve U' = A(z,λ)U along the straight segment z(t) = tζ with U(0) = I,
/// and evaluate the growth envelope used to sanity-check the result.
pub fn transfer_matrix(
    op: &PeriodicOperator,
    lambda: Complex64,
    endpoint: Complex64,
    opts: IntegrationOptions,
) -> Result<TransferMatrix> {
    let sys = FirstOrderSystem::new(op, lambda)?;
    let dim = sys.dim();
    let rhs = |t: f64, y: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
        let a = sys.eval(endpoint * t)?;
        Ok(a * y * endpoint)
    };
    let eye = DMatrix::identity(dim, dim);
    let (u, steps, est_error) = dopri5(&rhs, eye, 0.0, 1.0, opts.rtol, opts.atol)?;

    // Quadrature of the Gronwall exponent along the same path.
    let (nodes, weights) = gauss_legendre(48);
    let mut bound = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        let t = 0.5 * (x + 1.0);
        let a = sys.eval(endpoint * t)?;
        bound += 0.5 * w * spectral_norm(&a) * endpoint.norm();
    }
    let log_norm = spectral_norm(&u).ln();
    Ok(TransferMatrix {
        u,
        endpoint,
        lambda,
        steps,
        est_error,
        log_norm,
        gronwall_log_bound: bound,
    })
}

/// log|det| and arg(det) of a small matrix by partial-pivot elimination;
/// stable even when the determinant itself overflows f64.
fn det_log(m: &DMatrix<Complex64>) -> (f64, f64) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut log_abs = 0.0_f64;
    let mut arg = 0.0_f64;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            if a[(r, col)].norm() > best {
                best = a[(r, col)].norm();
                pivot = r;
            }
        }
        if best == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            arg += std::f64::consts::PI;
        }
        let p = a[(col, col)];
        log_abs += p.norm().ln();
        arg += p.arg();
        for r in (col + 1)..n {
            let factor = a[(r, col)] / p;
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= factor * v;
            }
        }
    }
    (log_abs, wrap_angle(arg))
}

/// The Floquet determinant d(λ) = det(I - U(2π, λ)); λ is a periodic
/// eigenvalue exactly when d(λ) = 0.
pub fn floquet_determinant(
    op: &PeriodicOperator,
    lambda: Complex64,
    opts: IntegrationOptions,
) -> Result<Complex64> {
    let tm = transfer_matrix(op, lambda, Complex64::new(TWO_PI, 0.0), opts)?;
    let mut m = -tm.u;
    for i in 0..m.nrows() {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let (log_abs, arg) = det_log(&m);
    Ok(Complex64::from_polar(log_abs.exp(), arg))
}

// ---------------------------------------------------------------------------
// Analytic square root (Dunford-Taylor contour)
// ---------------------------------------------------------------------------

/// Principal matrix square root of the leading coefficient at z, computed
/// by the resolvent contour integral over a keyhole-shaped path enclosing
/// the spectrum while avoiding the cut (-inf, 0].
///
/// The contour parameters (inner/outer radii and opening angle) are derived
/// from the spectrum at each point, which re-seeds the integral whenever the
/// eigenvalues move; continuity in z then comes from the principal branch.
pub fn analytic_sqrt(a2: &CoefficientMatrix, z: Complex64) -> Result<DMatrix<Complex64>> {
    let m = a2.evaluate(z)?;
    matrix_sqrt(&m, z)
}

pub(crate) fn matrix_sqrt(m: &DMatrix<Complex64>, z: Complex64) -> Result<DMatrix<Complex64>> {
    let k = m.nrows();
    let (eigs, _) = linalg::eig(m)?;
    let mut min_mod = f64::INFINITY;
    let mut max_mod = 0.0_f64;
    let mut max_arg = 0.0_f64;
    for mu in &eigs {
        let r = mu.norm();
        if r == 0.0 || (mu.re <= 0.0 && mu.im.abs() <= 1e-13 * (1.0 + mu.re.abs())) {
            return Err(SpectraError::BranchCut { z });
        }
        min_mod = min_mod.min(r);
        max_mod = max_mod.max(r);
        max_arg = max_arg.max(mu.arg().abs());
    }
    let r1 = 0.5 * min_mod;
    let r2 = 2.0 * max_mod;
    let theta = 0.5 * (max_arg + std::f64::consts::PI);

    let resolvent = |zeta: Complex64| -> Result<DMatrix<Complex64>> {
        let mut a = -m.clone();
        for i in 0..k {
            a[(i, i)] += zeta;
        }
        a.clone().try_inverse().ok_or(SpectraError::BranchCut { z })
    };

    let mut attempt_nodes = 96usize;
    for _ in 0..3 {
        let (nodes, weights) = gauss_legendre(attempt_nodes);
        let mut acc = DMatrix::from_element(k, k, Complex64::new(0.0, 0.0));
        // Outer arc: ζ = r2 e^{iφ}, φ in [-θ, θ], counterclockwise.
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let phi = theta * x;
            let zeta = Complex64::from_polar(r2, phi);
            let dzeta = Complex64::i() * zeta * theta;
            acc += resolvent(zeta)? * (zeta.sqrt() * dzeta * *w);
        }
        // Inner arc: ζ = r1 e^{iφ}, φ in [θ, -θ], clockwise.
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let phi = -theta * x;
            let zeta = Complex64::from_polar(r1, phi);
            let dzeta = -Complex64::i() * zeta * theta;
            acc += resolvent(zeta)? * (zeta.sqrt() * dzeta * *w);
        }
        // Radial segments at ±θ.
        let half_len = 0.5 * (r2 - r1);
        let mid = 0.5 * (r2 + r1);
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let rho = mid + half_len * x;
            for sign in [1.0, -1.0] {
                let dir = Complex64::from_polar(1.0, sign * theta);
                let zeta = dir * rho;
                // +θ ray runs outer→inner, -θ ray inner→outer.
                let dzeta = dir * (-sign) * half_len;
                acc += resolvent(zeta)? * (zeta.sqrt() * dzeta * *w);
            }
        }
        let s = acc / Complex64::new(0.0, TWO_PI);
        let defect = (&s * &s - m).norm();
        if defect <= 1e-10 * (1.0 + m.norm()) {
            return Ok(s);
        }
        attempt_nodes *= 2;
    }
    Err(SpectraError::EigFailure(format!(
        "square-root contour integral did not converge at z = {z}"
    )))
}

// ---------------------------------------------------------------------------
// Block-diagonalizing preconditioner
// ---------------------------------------------------------------------------

/// Transfer matrix computed in the similarity frame that block-diagonalizes
/// the λ-leading part of A(z,λ). Provided as an optional integration route
/// for large |λ|; results must agree with `transfer_matrix`.
pub fn transfer_matrix_preconditioned(
    op: &PeriodicOperator,
    lambda: Complex64,
    endpoint: Complex64,
    opts: IntegrationOptions,
) -> Result<TransferMatrix> {
    let std_form = op.to_standard()?;
    if std_form.order() != 2 {
        return transfer_matrix(op, lambda, endpoint, opts);
    }
    let k = std_form.k();
    let a2 = std_form
        .second()
        .cloned()
        .expect("second-order operator has a leading coefficient");
    let a2_deriv = a2.derivative();
    let kappa = lambda.sqrt();
    let sys = FirstOrderSystem::new(op, lambda)?;

    // S(z) with S² = A₂(z): principal root, or i·sqrt(-A₂) when the
    // spectrum of A₂ sits in the left half-plane instead.
    let sqrt_at = |z: Complex64| -> Result<DMatrix<Complex64>> {
        let m = a2.evaluate(z)?;
        match matrix_sqrt(&m, z) {
            Ok(s) => Ok(s),
            Err(SpectraError::BranchCut { .. }) => {
                let s = matrix_sqrt(&(-&m), z)?;
                Ok(s * Complex64::i())
            }
            Err(e) => Err(e),
        }
    };
    // S'(z) from the Sylvester identity S'S + SS' = A₂'(z).
    let sqrt_deriv = |z: Complex64, s: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
        let rhs = a2_deriv.evaluate(z)?;
        let n2 = k * k;
        let mut sys_m = DMatrix::from_element(n2, n2, Complex64::new(0.0, 0.0));
        // vec(S'S + SS') = (Sᵀ ⊗ I + I ⊗ S) vec(S') with column-major vec.
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        let row = a + b * k;
                        let col = c + d * k;
                        let mut v = Complex64::new(0.0, 0.0);
                        if a == c {
                            v += s[(d, b)];
                        }
                        if b == d {
                            v += s[(a, c)];
                        }
                        sys_m[(row, col)] += v;
                    }
                }
            }
        }
        let rhs_vec = DVector::from_fn(n2, |i, _| rhs[(i % k, i / k)]);
        let sol = sys_m
            .lu()
            .solve(&rhs_vec)
            .ok_or(SpectraError::BranchCut { z })?;
        Ok(DMatrix::from_fn(k, k, |i, j| sol[i + j * k]))
    };

    let build_b = |s: &DMatrix<Complex64>| -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or(SpectraError::EigFailure("singular square root".into()))?;
        let mut b = DMatrix::from_element(2 * k, 2 * k, Complex64::new(0.0, 0.0));
        let mut b_inv = DMatrix::from_element(2 * k, 2 * k, Complex64::new(0.0, 0.0));
        for i in 0..k {
            b[(i, i)] = Complex64::new(1.0, 0.0);
            b[(i, k + i)] = Complex64::new(-1.0, 0.0);
            b_inv[(i, i)] = Complex64::new(0.5, 0.0);
            b_inv[(k + i, i)] = Complex64::new(-0.5, 0.0);
            for j in 0..k {
                b[(k + i, j)] = kappa * s_inv[(i, j)];
                b[(k + i, k + j)] = kappa * s_inv[(i, j)];
                b_inv[(i, k + j)] = 0.5 * s[(i, j)] / kappa;
                b_inv[(k + i, k + j)] = 0.5 * s[(i, j)] / kappa;
            }
        }
        Ok((b, b_inv))
    };

    let rhs = |t: f64, w: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
        let z = endpoint * t;
        let s = sqrt_at(z)?;
        let (b, b_inv) = build_b(&s)?;
        let sp = sqrt_deriv(z, &s)?;
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or(SpectraError::EigFailure("singular square root".into()))?;
        let sinv_prime = -(&s_inv * &sp * &s_inv);
        let mut b_prime = DMatrix::from_element(2 * k, 2 * k, Complex64::new(0.0, 0.0));
        for i in 0..k {
            for j in 0..k {
                b_prime[(k + i, j)] = kappa * sinv_prime[(i, j)];
                b_prime[(k + i, k + j)] = kappa * sinv_prime[(i, j)];
            }
        }
        let a = sys.eval(z)?;
        let calligraphic_a = &b_inv * (a * &b - b_prime);
        Ok(calligraphic_a * w * endpoint)
    };

    let eye = DMatrix::identity(2 * k, 2 * k);
    let (w, steps, est_error) = dopri5(&rhs, eye, 0.0, 1.0, opts.rtol, opts.atol)?;
    let s_end = sqrt_at(endpoint)?;
    let (b_end, _) = build_b(&s_end)?;
    let s0 = sqrt_at(Complex64::new(0.0, 0.0))?;
    let (_, b0_inv) = build_b(&s0)?;
    let u = b_end * w * b0_inv;

    let (nodes, weights) = gauss_legendre(48);
    let mut bound = 0.0;
    for (x, wq) in nodes.iter().zip(weights.iter()) {
        let t = 0.5 * (x + 1.0);
        let a = sys.eval(endpoint * t)?;
        bound += 0.5 * wq * spectral_norm(&a) * endpoint.norm();
    }
    let log_norm = spectral_norm(&u).ln();
    Ok(TransferMatrix {
        u,
        endpoint,
        lambda,
        steps,
        est_error,
        log_norm,
        gronwall_log_bound: bound,
    })
}

// ---------------------------------------------------------------------------
// Eigenvalue location by the argument principle
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn diameter(&self) -> f64 {
        ((self.re_max - self.re_min).powi(2) + (self.im_max - self.im_min).powi(2)).sqrt()
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn contains(&self, z: Complex64, pad: f64) -> bool {
        z.re >= self.re_min - pad
            && z.re <= self.re_max + pad
            && z.im >= self.im_min - pad
            && z.im <= self.im_max + pad
    }

    fn dilated(&self, factor: f64) -> Rectangle {
        let cre = 0.5 * (self.re_min + self.re_max);
        let cim = 0.5 * (self.im_min + self.im_max);
        let hre = 0.5 * (self.re_max - self.re_min) * factor;
        let him = 0.5 * (self.im_max - self.im_min) * factor;
        Rectangle::new(cre - hre, cre + hre, cim - him, cim + him)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LocateOptions {
    /// Polish target on |d(λ)|.
    pub tol: f64,
    /// Maximum subdivision depth before giving up.
    pub max_depth: usize,
    /// A boundary sample collapsing below this fraction of its neighbors
    /// counts as a zero on the boundary and forces a dilation/jitter retry.
    pub boundary_floor: f64,
    /// Total d-evaluation budget.
    pub max_evals: usize,
    /// Two zeros closer than this (relative) are reported as one double zero.
    pub double_zero_gap: f64,
    pub scan: IntegrationOptions,
    pub polish: IntegrationOptions,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_depth: 40,
            boundary_floor: 1e-12,
            max_evals: 2_000_000,
            double_zero_gap: 1e-6,
            scan: IntegrationOptions::default(),
            polish: IntegrationOptions::tight(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocatedEigenvalue {
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// |d(λ)| at the accepted point.
    pub abs_det: f64,
}

/// One boundary evaluation of the scan, tagged with the cell that used it.
#[derive(Clone, Debug)]
pub struct ScanSample {
    pub lambda: Complex64,
    pub abs_det: f64,
    pub cell_id: usize,
}

#[derive(Clone, Debug)]
pub struct LocateOutcome {
    pub eigenvalues: Vec<LocatedEigenvalue>,
    pub scan: Vec<ScanSample>,
    pub evals: usize,
    pub top_winding: i64,
}

struct Locator<'a> {
    op: &'a PeriodicOperator,
    opts: LocateOptions,
    cache: HashMap<(u64, u64), Complex64>,
    scan: Vec<ScanSample>,
    evals: usize,
    next_cell_id: usize,
}

impl<'a> Locator<'a> {
    fn d(&mut self, lambda: Complex64, cell_id: usize, tight: bool) -> Result<Complex64> {
        let key = (lambda.re.to_bits(), lambda.im.to_bits());
        if !tight {
            if let Some(v) = self.cache.get(&key) {
                return Ok(*v);
            }
        }
        if self.evals >= self.opts.max_evals {
            return Err(SpectraError::BudgetExhausted(format!(
                "determinant evaluation budget of {} exhausted",
                self.opts.max_evals
            )));
        }
        self.evals += 1;
        let opts = if tight { self.opts.polish } else { self.opts.scan };
        let v = floquet_determinant(self.op, lambda, opts)?;
        if !tight {
            self.cache.insert(key, v);
            self.scan.push(ScanSample {
                lambda,
                abs_det: v.norm(),
                cell_id,
            });
        }
        Ok(v)
    }

    /// Winding number of d around the rectangle by adaptive phase tracking,
    /// accepted only when two consecutive base resolutions agree (guards
    /// against phase aliasing on long edges). `None` marks a dirty boundary
    /// (a zero sitting on or numerically too close to it), telling the
    /// caller to jitter or dilate.
    fn winding(&mut self, rect: &Rectangle, cell_id: usize) -> Result<Option<i64>> {
        let mut previous: Option<i64> = None;
        for per_edge in [12usize, 24, 48, 96, 192] {
            let Some(w) = self.winding_once(rect, cell_id, per_edge)? else {
                eprintln!("DBGW rect=({},{})x({},{}) per_edge={per_edge} dirty", rect.re_min, rect.re_max, rect.im_min, rect.im_max);
                return Ok(None);
            };
            eprintln!("DBGW rect=({},{})x({},{}) per_edge={per_edge} w={w}", rect.re_min, rect.re_max, rect.im_min, rect.im_max);
            if previous == Some(w) {
                return Ok(Some(w));
            }
            previous = Some(w);
        }
        Ok(None)
    }

    fn winding_once(
        &mut self,
        rect: &Rectangle,
        cell_id: usize,
        per_edge: usize,
    ) -> Result<Option<i64>> {
        let corners = rect.corners();
        let mut pts: Vec<Complex64> = Vec::new();
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            for i in 0..per_edge {
                pts.push(a + (b - a) * (i as f64 / per_edge as f64));
            }
        }
        pts.push(corners[0]);
        let mut vals: Vec<Complex64> = Vec::with_capacity(pts.len());
        for &p in &pts {
            let v = self.d(p, cell_id, false)?;
            if v.norm() == 0.0 {
                return Ok(None);
            }
            vals.push(v);
        }

        let mut total = 0.0_f64;
        let mut i = 0usize;
        let mut refinements = 0usize;
        while i + 1 < pts.len() {
            let va = vals[i];
            let vb = vals[i + 1];
            let delta = wrap_angle(vb.arg() - va.arg());
            let seg = (pts[i + 1] - pts[i]).norm();
            if delta.abs() > 0.45 * std::f64::consts::PI {
                // A phase jump that survives down to a degenerate segment is
                // a zero sitting on the boundary: the ±π increment would be
                // resolved arbitrarily, so reject this boundary instead.
                if seg <= 1e-12 * rect.diameter().max(1.0) || refinements > 4096 {
                    return Ok(None);
                }
                refinements += 1;
                let mid = 0.5 * (pts[i] + pts[i + 1]);
                let vm = self.d(mid, cell_id, false)?;
                if vm.norm() == 0.0 {
                    return Ok(None);
                }
                // A sample collapsing relative to both neighbors puts a zero
                // on the boundary itself.
                if vm.norm() < self.opts.boundary_floor * va.norm().min(vb.norm()) {
                    return Ok(None);
                }
                pts.insert(i + 1, mid);
                vals.insert(i + 1, vm);
                continue;
            }
            total += delta;
            i += 1;
        }
        let w = (total / TWO_PI).round();
        if (total / TWO_PI - w).abs() > 0.2 {
            return Ok(None);
        }
        Ok(Some(w as i64))
    }

    fn newton_polish(
        &mut self,
        start: Complex64,
        multiplicity: f64,
        iters: usize,
    ) -> Result<Complex64> {
        let mut lam = start;
        for _ in 0..iters {
            let h = 1e-6 * (1.0 + lam.norm());
            let d0 = self.d(lam, usize::MAX, true)?;
            let dp = self.d(lam + Complex64::new(h, 0.0), usize::MAX, true)?;
            let dm = self.d(lam - Complex64::new(h, 0.0), usize::MAX, true)?;
            let deriv = (dp - dm) / Complex64::new(2.0 * h, 0.0);
            if deriv.norm() == 0.0 {
                break;
            }
            let step = d0 / deriv * multiplicity;
            lam -= step;
            if step.norm() < 1e-13 * (1.0 + lam.norm()) {
                break;
            }
        }
        Ok(lam)
    }

    /// Newton on the finite-difference derivative d'(λ); used to pin double
    /// zeros where d itself is quadratically flat.
    fn polish_double(&mut self, start: Complex64) -> Result<Complex64> {
        let mut lam = start;
        for _ in 0..12 {
            let h = 5e-5 * (1.0 + lam.norm());
            let dp = self.d(lam + Complex64::new(h, 0.0), usize::MAX, true)?;
            let dm = self.d(lam - Complex64::new(h, 0.0), usize::MAX, true)?;
            let d0 = self.d(lam, usize::MAX, true)?;
            let d1 = (dp - dm) / Complex64::new(2.0 * h, 0.0);
            let d2 = (dp - 2.0 * d0 + dm) / Complex64::new(h * h, 0.0);
            if d2.norm() == 0.0 {
                break;
            }
            let step = d1 / d2;
            lam -= step;
            if step.norm() < 1e-12 * (1.0 + lam.norm()) {
                break;
            }
        }
        Ok(lam)
    }

    /// Resolve a winding-2 cell: either two nearby simple zeros or one
    /// double zero, decided by a local quadratic model of d.
    fn resolve_pair(&mut self, rect: &Rectangle) -> Result<Vec<LocatedEigenvalue>> {
        let center = self.newton_polish(rect.center(), 2.0, 30)?;
        let h = 1e-3 * (1.0 + center.norm());
        let d0 = self.d(center, usize::MAX, true)?;
        let dp = self.d(center + Complex64::new(h, 0.0), usize::MAX, true)?;
        let dm = self.d(center - Complex64::new(h, 0.0), usize::MAX, true)?;
        let alpha = (dp - 2.0 * d0 + dm) / Complex64::new(2.0 * h * h, 0.0);
        let beta = (dp - dm) / Complex64::new(2.0 * h, 0.0);
        let gamma = d0;
        if alpha.norm() == 0.0 {
            let lam = self.polish_double(center)?;
            let val = self.d(lam, usize::MAX, true)?;
            return Ok(vec![LocatedEigenvalue {
                lambda: lam,
                multiplicity: 2,
                abs_det: val.norm(),
            }]);
        }
        let disc = (beta * beta - 4.0 * alpha * gamma).sqrt();
        let r1 = center + (-beta + disc) / (2.0 * alpha);
        let r2 = center + (-beta - disc) / (2.0 * alpha);
        let gap = (r1 - r2).norm();
        if gap > self.opts.double_zero_gap * (1.0 + center.norm()) {
            let mut out = Vec::new();
            for seed in [r1, r2] {
                let lam = self.newton_polish(seed, 1.0, 30)?;
                let val = self.d(lam, usize::MAX, true)?;
                out.push(LocatedEigenvalue {
                    lambda: lam,
                    multiplicity: 1,
                    abs_det: val.norm(),
                });
            }
            // Distinct simple zeros must not have collapsed to one point.
            if (out[0].lambda - out[1].lambda).norm()
                > 0.1 * self.opts.double_zero_gap * (1.0 + center.norm())
            {
                return Ok(out);
            }
        }
        let lam = self.polish_double(center)?;
        let val = self.d(lam, usize::MAX, true)?;
        Ok(vec![LocatedEigenvalue {
            lambda: lam,
            multiplicity: 2,
            abs_det: val.norm(),
        }])
    }

    fn process(
        &mut self,
        rect: Rectangle,
        winding: i64,
        depth: usize,
        found: &mut Vec<LocatedEigenvalue>,
    ) -> Result<()> {
        if winding == 0 {
            return Ok(());
        }
        if depth > self.opts.max_depth {
            return Err(SpectraError::BudgetExhausted(format!(
                "subdivision depth {} exceeded near {}",
                self.opts.max_depth,
                rect.center()
            )));
        }
        let small = rect.diameter() < 0.75;
        if small && winding == 1 {
            let lam = self.newton_polish(rect.center(), 1.0, 40)?;
            let val = self.d(lam, usize::MAX, true)?;
            if val.norm() <= self.opts.tol && rect.contains(lam, 0.25 * rect.diameter()) {
                found.push(LocatedEigenvalue {
                    lambda: lam,
                    multiplicity: 1,
                    abs_det: val.norm(),
                });
                return Ok(());
            }
        }
        if small && winding == 2 {
            let zeros = self.resolve_pair(&rect)?;
            let all_ok = zeros
                .iter()
                .all(|z| rect.contains(z.lambda, 0.25 * rect.diameter()));
            if all_ok {
                found.extend(zeros);
                return Ok(());
            }
        }

        // Subdivide across the longer side, jittering the split line away
        // from boundary zeros so sibling windings stay exact.
        let horizontal = (rect.re_max - rect.re_min) >= (rect.im_max - rect.im_min);
        for frac in [0.5, 0.53, 0.47, 0.58, 0.42, 0.61, 0.39] {
            let (a, b) = if horizontal {
                let split = rect.re_min + frac * (rect.re_max - rect.re_min);
                (
                    Rectangle::new(rect.re_min, split, rect.im_min, rect.im_max),
                    Rectangle::new(split, rect.re_max, rect.im_min, rect.im_max),
                )
            } else {
                let split = rect.im_min + frac * (rect.im_max - rect.im_min);
                (
                    Rectangle::new(rect.re_min, rect.re_max, rect.im_min, split),
                    Rectangle::new(rect.re_min, rect.re_max, split, rect.im_max),
                )
            };
            let id_a = self.fresh_cell_id();
            let Some(wa) = self.winding(&a, id_a)? else {
                eprintln!("DBG dirty A frac={frac} rect a=({},{})x({},{})", a.re_min, a.re_max, a.im_min, a.im_max);
                continue;
            };
            let id_b = self.fresh_cell_id();
            let Some(wb) = self.winding(&b, id_b)? else {
                eprintln!("DBG dirty B frac={frac}");
                continue;
            };
            if wa + wb != winding {
                eprintln!("DBG conservation {wa}+{wb} != {winding} frac={frac} rect=({},{})x({},{})", rect.re_min, rect.re_max, rect.im_min, rect.im_max);
                // Conservation failure means a zero sits on the split line.
                continue;
            }
            self.process(a, wa, depth + 1, found)?;
            self.process(b, wb, depth + 1, found)?;
            return Ok(());
        }
        Err(SpectraError::BudgetExhausted(format!(
            "could not find a clean subdivision of the cell centered at {}",
            rect.center()
        )))
    }

    fn fresh_cell_id(&mut self) -> usize {
        let id = self.next_cell_id;
        self.next_cell_id += 1;
        id
    }
}

/// Locate all eigenvalues of L inside the rectangle by winding-number
/// subdivision plus Newton polish, reporting multiplicities by winding
/// count. The input rectangle is dilated by 1% (repeatedly, up to four
/// times) when a zero sits too close to its boundary.
pub fn locate_eigenvalues(
    op: &PeriodicOperator,
    rect: Rectangle,
    opts: LocateOptions,
) -> Result<LocateOutcome> {
    let mut locator = Locator {
        op,
        opts,
        cache: HashMap::new(),
        scan: Vec::new(),
        evals: 0,
        next_cell_id: 0,
    };
    let mut outer = rect;
    let mut top = None;
    for _ in 0..4 {
        let id = locator.fresh_cell_id();
        if let Some(w) = locator.winding(&outer, id)? {
            top = Some(w);
            break;
        }
        outer = outer.dilated(1.01);
    }
    let Some(top_winding) = top else {
        return Err(SpectraError::BudgetExhausted(
            "rectangle boundary kept hitting zeros after dilation retries".into(),
        ));
    };
    let mut found = Vec::new();
    locator.process(outer, top_winding, 0, &mut found)?;

    // Merge duplicates (zeros found from adjacent cells).
    found.sort_by(|a, b| {
        a.lambda
            .re
            .partial_cmp(&b.lambda.re)
            .unwrap()
            .then(a.lambda.im.partial_cmp(&b.lambda.im).unwrap())
    });
    let mut merged: Vec<LocatedEigenvalue> = Vec::new();
    for item in found {
        match merged.last_mut() {
            Some(prev)
                if (prev.lambda - item.lambda).norm() < 1e-8 * (1.0 + item.lambda.norm()) =>
            {
                prev.multiplicity += item.multiplicity;
            }
            _ => merged.push(item),
        }
    }
    let total: usize = merged.iter().map(|m| m.multiplicity).sum();
    if total as i64 != top_winding {
        return Err(SpectraError::BudgetExhausted(format!(
            "winding count {top_winding} but {total} zeros recovered"
        )));
    }
    Ok(LocateOutcome {
        eigenvalues: merged,
        scan: locator.scan,
        evals: locator.evals,
        top_winding,
    })
}

// ---------------------------------------------------------------------------
// Gronwall envelope scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GronwallSample {
    pub lambda: Complex64,
    pub log_norm_u: f64,
    pub gronwall_log_bound: f64,
    /// log‖U‖ / (1 + |λ|^{1/2}).
    pub growth_ratio: f64,
    pub ok: bool,
}

/// Evaluate the monodromy matrix over a λ-grid and report both the Gronwall
/// inequality check and the |λ|^{1/2} growth ratio per sample.
pub fn gronwall_scan(
    op: &PeriodicOperator,
    lambdas: &[Complex64],
    opts: IntegrationOptions,
    slack: f64,
) -> Result<Vec<GronwallSample>> {
    use rayon::prelude::*;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let tm = transfer_matrix(op, lambda, Complex64::new(TWO_PI, 0.0), opts)?;
            Ok(GronwallSample {
                lambda,
                log_norm_u: tm.log_norm,
                gronwall_log_bound: tm.gronwall_log_bound,
                growth_ratio: tm.log_norm.max(0.0) / (1.0 + lambda.norm().sqrt()),
                ok: tm.gronwall_ok(slack),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Periodic resolvent
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ResolventOutput {
    pub y: VectorHardyFunction,
    /// ‖(L - λ)Y - f‖_L on the full convolution band.
    pub residual: f64,
    pub abs_det: f64,
}

/// Solve (L - λ)Y = f for the unique periodic solution by variation of
/// parameters: Y(z) = U(z)ξ + U(z)∫₀^z U⁻¹F, with the initial value ξ
/// chosen so that Y(2π) = Y(0).
pub fn periodic_resolvent(
    op: &PeriodicOperator,
    lambda: Complex64,
    f: &VectorHardyFunction,
    n_out: usize,
    opts: IntegrationOptions,
) -> Result<ResolventOutput> {
    let sys = FirstOrderSystem::new(op, lambda)?;
    let dim = sys.dim();
    let k = f.k();
    if k != op.k() {
        return Err(SpectraError::DimensionMismatch(k, op.k()));
    }
    // The eigenvalue equation here reads LY = λY + f, i.e. the λ-shifted
    // forcing enters with A₂⁻¹ f in the last block row.
    let rhs = |t: f64, y: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
        let z = Complex64::new(t, 0.0);
        let a = sys.eval(z)?;
        let mut dy = &a * y;
        let force = sys.force(z, f)?;
        for i in 0..dim {
            dy[(i, dim)] += force[i];
        }
        Ok(dy * Complex64::new(1.0, 0.0))
    };

    // Augmented state [U | v] with U(0) = I, v(0) = 0.
    let mut y0 = DMatrix::from_element(dim, dim + 1, Complex64::new(0.0, 0.0));
    for i in 0..dim {
        y0[(i, i)] = Complex64::new(1.0, 0.0);
    }
    let q = (4 * n_out).max(2 * n_out + 2);
    let checkpoints: Vec<f64> = (1..=q).map(|j| TWO_PI * j as f64 / q as f64).collect();
    let states = dopri5_checkpoints(&rhs, y0, 0.0, &checkpoints, opts.rtol, opts.atol)?;
    let last = states.last().unwrap();
    let u_end = last.columns(0, dim).clone_owned();
    let v_end = last.column(dim).clone_owned();

    let mut i_minus_u = -&u_end;
    for i in 0..dim {
        i_minus_u[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let (log_abs, arg) = det_log(&i_minus_u);
    let abs_det = log_abs.exp();
    let d = Complex64::from_polar(abs_det, arg);
    if !abs_det.is_finite() || abs_det < 1e-10 {
        return Err(SpectraError::NearEigenvalue {
            lambda,
            det: abs_det,
        });
    }
    let _ = d;
    let xi = i_minus_u
        .lu()
        .solve(&v_end)
        .ok_or(SpectraError::NearEigenvalue {
            lambda,
            det: abs_det,
        })?;

    // Samples of the Y block at the grid points (j = q lands on 2π ≡ 0).
    let mut comps: Vec<Vec<Complex64>> = vec![Vec::with_capacity(q); k];
    // First sample at x = 0: Y(0) = ξ.
    for (i, comp) in comps.iter_mut().enumerate() {
        comp.push(xi[i]);
    }
    for state in states.iter().take(q - 1) {
        let u = state.columns(0, dim);
        let v = state.column(dim);
        let y = u * &xi + v;
        for (i, comp) in comps.iter_mut().enumerate() {
            comp.push(y[i]);
        }
    }
    let components = comps
        .into_iter()
        .map(|samples| HardyFunction::from_real_samples(&samples, f.domain(), n_out))
        .collect::<Result<Vec<_>>>()?;
    let y = VectorHardyFunction::new(components)?;

    // Residual of the reconstructed solution: (L - λ)Y - f in L².
    let ly = op.apply_exact(&y)?;
    let shifted = ly.sub(&y.scaled(lambda).truncated(ly.n_trunc()))?;
    let residual = shifted
        .sub(&f.truncated(shifted.n_trunc()))?
        .l2_norm();
    Ok(ResolventOutput {
        y,
        residual,
        abs_det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::StripDomain;
    use crate::operator::CoefficientMatrix;

    fn dom(t: f64) -> StripDomain {
        StripDomain::new(t).unwrap()
    }

    fn scalar_op(
        domain: StripDomain,
        n: usize,
        a2: Option<&[(i64, Complex64)]>,
        a1: &[(i64, Complex64)],
        a0: &[(i64, Complex64)],
    ) -> PeriodicOperator {
        let build = |modes: &[(i64, Complex64)]| {
            CoefficientMatrix::scalar(HardyFunction::from_modes(domain, n, modes).unwrap())
        };
        PeriodicOperator::new_standard(a2.map(build), build(a1), build(a0)).unwrap()
    }

    fn minus_d2(domain: StripDomain, n: usize) -> PeriodicOperator {
        scalar_op(
            domain,
            n,
            Some(&[(0, Complex64::new(-1.0, 0.0))]),
            &[],
            &[],
        )
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn transfer_for_minus_d2_matches_closed_form() {
        // For L = -D², U(2π, λ) has eigenvalues e^{±i 2π √λ}.
        let d = dom(0.5);
        let op = minus_d2(d, 4);
        for lambda in [
            Complex64::new(0.3, 0.0),
            Complex64::new(2.0, 0.5),
            Complex64::new(-1.0, 0.0),
        ] {
            let tm = transfer_matrix(
                op.to_standard().as_ref().unwrap(),
                lambda,
                Complex64::new(TWO_PI, 0.0),
                IntegrationOptions::tight(),
            )
            .unwrap();
            let (eigs, _) = linalg::eig(&tm.u).unwrap();
            let root = lambda.sqrt();
            let mut want = [
                (Complex64::i() * TWO_PI * root).exp(),
                (-Complex64::i() * TWO_PI * root).exp(),
            ];
            let mut got = eigs.clone();
            want.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            got.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            for (g, w) in got.iter().zip(want.iter()) {
                assert!(
                    (g - w).norm() < 1e-9 * (1.0 + w.norm()),
                    "λ = {lambda}: {g} vs {w}"
                );
            }
        }
    }

    #[test]
    fn transfer_at_lambda_zero_is_jordan_block() {
        let d = dom(0.5);
        let op = minus_d2(d, 4);
        let tm = transfer_matrix(
            &op,
            Complex64::new(0.0, 0.0),
            Complex64::new(TWO_PI, 0.0),
            IntegrationOptions::default(),
        )
        .unwrap();
        let want = [
            [one(), Complex64::new(TWO_PI, 0.0)],
            [Complex64::new(0.0, 0.0), one()],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((tm.u[(i, j)] - want[i][j]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn first_order_transfer_is_exponential() {
        // y' = λ y over one period: U(2π, λ) = e^{2πλ}.
        let d = dom(0.5);
        let op = scalar_op(d, 4, None, &[(0, one())], &[]);
        let lambda = Complex64::new(0.25, 0.4);
        let tm = transfer_matrix(
            &op,
            lambda,
            Complex64::new(TWO_PI, 0.0),
            IntegrationOptions::default(),
        )
        .unwrap();
        let want = (TWO_PI * lambda).exp();
        assert!((tm.u[(0, 0)] - want).norm() < 1e-9 * want.norm());
        // d(λ) = 1 - e^{2πλ}.
        let det = floquet_determinant(&op, lambda, IntegrationOptions::default()).unwrap();
        assert!((det - (one() - want)).norm() < 1e-8);
    }

    #[test]
    fn gronwall_envelope_and_cocycle() {
        let d = dom(0.5);
        let op = scalar_op(
            d,
            8,
            Some(&[(0, Complex64::new(-1.0, 0.0))]),
            &[],
            &[
                (2, one()),
                (-2, one()),
            ],
        );
        let lambda = Complex64::new(3.0, 0.7);
        let endpoint = Complex64::new(TWO_PI, 0.3);
        let tm = transfer_matrix(&op, lambda, endpoint, IntegrationOptions::default()).unwrap();
        assert!(tm.gronwall_ok(1e-6), "{} vs {}", tm.log_norm, tm.gronwall_log_bound);

        // Cocycle along the same segment: U(ζ) = U(ζ ← ζ/2) U(ζ/2).
        let half = endpoint * 0.5;
        let tm_half = transfer_matrix(&op, lambda, half, IntegrationOptions::default()).unwrap();
        let sys = FirstOrderSystem::new(&op, lambda).unwrap();
        let rhs = |t: f64, y: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
            let z = half + (endpoint - half) * t;
            Ok(sys.eval(z)? * y * (endpoint - half))
        };
        let eye = DMatrix::identity(2, 2);
        let (u_second, _, _) = dopri5(&rhs, eye, 0.0, 1.0, 1e-10, 1e-12).unwrap();
        let composed = u_second * &tm_half.u;
        assert!((&composed - &tm.u).norm() < 1e-8 * tm.u.norm().max(1.0));
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let d = dom(0.5);
        let id = CoefficientMatrix::identity(d, 2, 2).unwrap();
        let s = analytic_sqrt(&id, Complex64::new(0.3, 0.1)).unwrap();
        assert!((&s - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-12);

        let diag = CoefficientMatrix::constant(
            d,
            2,
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                Complex64::new(4.0, 0.0),
                Complex64::new(9.0, 0.0),
            ])),
        )
        .unwrap();
        let s = analytic_sqrt(&diag, Complex64::new(0.0, 0.0)).unwrap();
        assert!((s[(0, 0)] - Complex64::new(2.0, 0.0)).norm() < 1e-11);
        assert!((s[(1, 1)] - Complex64::new(3.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn sqrt_random_right_half_plane_spectrum() {
        // Diagonally dominant K = 3 matrix keeps its spectrum to the right.
        let d = dom(0.5);
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(5.0, 0.3),
                Complex64::new(0.7, -0.2),
                Complex64::new(0.1, 0.4),
                Complex64::new(-0.3, 0.5),
                Complex64::new(4.0, -0.6),
                Complex64::new(0.2, 0.1),
                Complex64::new(0.4, -0.1),
                Complex64::new(0.3, 0.2),
                Complex64::new(6.0, 0.8),
            ],
        );
        let cm = CoefficientMatrix::constant(d, 2, &m).unwrap();
        let s = analytic_sqrt(&cm, Complex64::new(1.0, 0.2)).unwrap();
        assert!((&s * &s - &m).norm() < 1e-10 * (1.0 + m.norm()));
    }

    #[test]
    fn sqrt_rejects_branch_cut() {
        let d = dom(0.5);
        let neg = CoefficientMatrix::constant(
            d,
            2,
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                Complex64::new(-1.0, 0.0),
                Complex64::new(2.0, 0.0),
            ])),
        )
        .unwrap();
        assert!(matches!(
            analytic_sqrt(&neg, Complex64::new(0.0, 0.0)),
            Err(SpectraError::BranchCut { .. })
        ));
    }

    #[test]
    fn preconditioned_transfer_agrees_with_direct() {
        let d = dom(0.4);
        let half = Complex64::new(0.25, 0.0);
        // Divergence operator with variable positive p₂ = 1 + cos(z)/2.
        let p2 = CoefficientMatrix::scalar(
            HardyFunction::from_modes(d, 8, &[(0, one()), (1, half), (-1, half)]).unwrap(),
        );
        let zero = CoefficientMatrix::scalar(HardyFunction::zero(d, 8).unwrap());
        let op = PeriodicOperator::new_divergence(p2, zero.clone(), zero).unwrap();
        let lambda = Complex64::new(11.0, 1.5);
        let endpoint = Complex64::new(TWO_PI, 0.0);
        let direct = transfer_matrix(&op, lambda, endpoint, IntegrationOptions::default()).unwrap();
        let pre =
            transfer_matrix_preconditioned(&op, lambda, endpoint, IntegrationOptions::default())
                .unwrap();
        let diff = (&pre.u - &direct.u).norm() / direct.u.norm();
        assert!(diff < 1e-7, "relative difference {diff}");
    }

    #[test]
    fn locate_minus_d2_spectrum() {
        let d = dom(0.5);
        let op = minus_d2(d, 4);
        let rect = Rectangle::new(-0.5, 10.5, -1.0, 1.0);
        let out = locate_eigenvalues(&op, rect, LocateOptions::default()).unwrap();
        let want: Vec<(f64, usize)> = vec![(0.0, 1), (1.0, 2), (4.0, 2), (9.0, 2)];
        assert_eq!(out.eigenvalues.len(), want.len(), "{:?}", out.eigenvalues);
        for (got, (lam, mult)) in out.eigenvalues.iter().zip(want) {
            assert!(
                (got.lambda - Complex64::new(lam, 0.0)).norm() < 1e-9,
                "{} vs {lam}",
                got.lambda
            );
            assert_eq!(got.multiplicity, mult, "at λ = {lam}");
        }
        assert_eq!(out.top_winding, 7);
    }

    #[test]
    fn locate_first_order_imaginary_ladder() {
        // d(λ) = 1 - e^{2πλ} has simple zeros at λ = in.
        let d = dom(0.5);
        let op = scalar_op(d, 4, None, &[(0, one())], &[]);
        let rect = Rectangle::new(-0.3, 0.3, -2.5, 2.5);
        let out = locate_eigenvalues(&op, rect, LocateOptions::default()).unwrap();
        assert_eq!(out.eigenvalues.len(), 5);
        for n in -2..=2i64 {
            let want = Complex64::new(0.0, n as f64);
            let got = out
                .eigenvalues
                .iter()
                .min_by(|a, b| {
                    (a.lambda - want)
                        .norm()
                        .partial_cmp(&(b.lambda - want).norm())
                        .unwrap()
                })
                .unwrap();
            assert!((got.lambda - want).norm() < 1e-9, "{} vs {want}", got.lambda);
            assert_eq!(got.multiplicity, 1);
        }
    }

    #[test]
    fn locate_empty_rectangle() {
        let d = dom(0.5);
        let op = minus_d2(d, 4);
        let rect = Rectangle::new(100.5, 101.0, -0.1, 0.1);
        let out = locate_eigenvalues(&op, rect, LocateOptions::default()).unwrap();
        assert!(out.eigenvalues.is_empty());
        assert_eq!(out.top_winding, 0);
    }

    #[test]
    fn resolvent_first_order_closed_form() {
        // p = 1, λ = 1/2, f = e^{ix}: the periodic solution of
        // (D - 1/2) Y = f is Y = e^{iz} / (i - 1/2).
        let d = dom(0.5);
        let op = scalar_op(d, 8, None, &[(0, one())], &[]);
        let f = VectorHardyFunction::scalar(HardyFunction::exponential(d, 8, 1).unwrap());
        let lambda = Complex64::new(0.5, 0.0);
        let out =
            periodic_resolvent(&op, lambda, &f, 24, IntegrationOptions::tight()).unwrap();
        let want = one() / (Complex64::i() - Complex64::new(0.5, 0.0));
        assert!(
            (out.y.component(0).coeff(1) - want).norm() < 1e-9,
            "{} vs {want}",
            out.y.component(0).coeff(1)
        );
        assert!(out.residual < 1e-9, "residual {}", out.residual);
    }

    #[test]
    fn resolvent_diagonal_second_order() {
        // L = -D², λ = 1/2, f = e^{ix}: Y = e^{ix}/(1 - 1/2) = 2 e^{ix}.
        let d = dom(0.5);
        let op = minus_d2(d, 8);
        let f = VectorHardyFunction::scalar(HardyFunction::exponential(d, 8, 1).unwrap());
        let out = periodic_resolvent(
            &op,
            Complex64::new(0.5, 0.0),
            &f,
            24,
            IntegrationOptions::tight(),
        )
        .unwrap();
        let got = out.y.component(0).coeff(1);
        assert!((got - Complex64::new(2.0, 0.0)).norm() < 1e-9, "{got}");
        assert!(out.residual < 1e-9);
    }

    #[test]
    fn resolvent_rejects_near_eigenvalue() {
        let d = dom(0.5);
        let op = minus_d2(d, 8);
        let f = VectorHardyFunction::scalar(HardyFunction::exponential(d, 8, 1).unwrap());
        let err = periodic_resolvent(
            &op,
            Complex64::new(1.0, 1e-13),
            &f,
            16,
            IntegrationOptions::default(),
        );
        assert!(matches!(err, Err(SpectraError::NearEigenvalue { .. })));
    }
}
