//! Small numerical building blocks: Gauss-Legendre rules, adaptive Simpson
//! quadrature along complex segments, spectral norms of small matrices, and
//! a few scalar helpers used across the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SpectraError};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre polynomial; n stays small
/// (<= 128) everywhere in this crate, so no asymptotic initial guesses are
/// needed beyond the Chebyshev one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrate `f` along the straight segment from `a` to `b` with a composite
/// Gauss-Legendre rule of `order` points on each of `panels` sub-segments.
pub fn segment_quadrature<F>(f: F, a: Complex64, b: Complex64, panels: usize, order: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let (nodes, weights) = gauss_legendre(order);
    let dz = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + dz * (p as f64 + 0.5);
        let half = dz * 0.5;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            total += f(mid + half * *x) * *w;
        }
    }
    total * (b - a) / (2.0 * panels as f64)
}

/// Adaptive Simpson quadrature of `f` along the straight segment [a, b].
///
/// The error control is on the absolute value of the complex increment; the
/// integrand is assumed analytic, so the classical 15x Richardson safety
/// factor applies.
pub fn adaptive_simpson_path<F>(
    f: &F,
    a: Complex64,
    b: Complex64,
    tol: f64,
    max_depth: usize,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, h: Complex64) -> Complex64 {
        (fa + 4.0 * fm + fb) * h / 6.0
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(Complex64) -> Complex64>(
        f: &F,
        a: Complex64,
        b: Complex64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: usize,
    ) -> Result<Complex64> {
        let m = (a + b) * 0.5;
        let lm = (a + m) * 0.5;
        let rm = (m + b) * 0.5;
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = (left + right - whole).norm();
        if err < 15.0 * tol || depth == 0 {
            return Ok(left + right + (left + right - whole) / 15.0);
        }
        if ((b - a).norm()) < 1e-14 {
            return Err(SpectraError::BudgetExhausted(format!(
                "adaptive quadrature interval collapsed near z = {a}"
            )));
        }
        let l = recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)?;
        Ok(l + r)
    }
    if (b - a).norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = (a + b) * 0.5;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Spectral (operator 2-) norm of a dense complex matrix by power iteration
/// on A*A, with entry scaling so that matrices with entries near the f64
/// overflow threshold still produce finite results.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    let scale = m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let a = m.map(|c| c / scale);
    let n = a.ncols();
    // Deterministic start vector with nonzero overlap in all directions.
    let mut v = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(1.0 + (i as f64 * 0.7).sin() * 0.3, (i as f64 * 1.3).cos() * 0.2)
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut sigma = 0.0;
    for _ in 0..60 {
        let w = &a * &v;
        let u = a.adjoint() * w;
        let nu = u.norm();
        if nu == 0.0 {
            return 0.0;
        }
        let next = nu.sqrt();
        let done = (next - sigma).abs() <= 1e-13 * next.max(1.0);
        sigma = next;
        v = u / Complex64::new(nu, 0.0);
        if done {
            break;
        }
    }
    sigma * scale
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Modified Bessel function I_n(x) by its power series; adequate for the
/// moderate arguments (|x| <= 10) used by the bundled coefficient families.
pub fn modified_bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // t_0 = (x/2)^n / n!
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / i as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let mut sum = term;
    for k in 1..200 {
        term *= half * half / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}
