//! Thin wrappers over the LAPACK-backed dense solvers, converting between
//! the nalgebra types used across the crate and the ndarray types expected
//! by the backend.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Result, SpectraError};

fn to_ndarray(m: &DMatrix<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues and right eigenvectors (as matrix columns) of a general
/// complex matrix.
pub fn eig(m: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let (vals, vecs) = to_ndarray(m)
        .eig()
        .map_err(|e| SpectraError::EigFailure(e.to_string()))?;
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, j)]);
    Ok((vals.to_vec(), vectors))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let (vals, vecs) = to_ndarray(m)
        .eigh(UPLO::Lower)
        .map_err(|e| SpectraError::EigFailure(e.to_string()))?;
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, j)]);
    Ok((vals.to_vec(), vectors))
}

/// Smallest eigenvalue of the Hermitian part (A + A*)/2.
pub fn hermitian_part_min_eig(m: &DMatrix<Complex64>) -> Result<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let (vals, _) = eigh(&h)?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Solve the Hermitian positive semidefinite system G x ≈ b through a
/// spectral pseudoinverse, discarding eigenvalues below `cutoff` times the
/// largest one. Returns (x, effective rank).
pub fn pseudo_solve(
    g: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    cutoff: f64,
) -> Result<(DVector<Complex64>, usize)> {
    let (vals, vecs) = eigh(g)?;
    let top = vals.iter().cloned().fold(0.0_f64, f64::max);
    let mut x = DVector::from_element(g.nrows(), Complex64::new(0.0, 0.0));
    let mut rank = 0;
    for (i, &s) in vals.iter().enumerate() {
        if s > cutoff * top && s > 0.0 {
            rank += 1;
            let u = vecs.column(i);
            let proj = u.dotc(b);
            x += u * (proj / Complex64::new(s, 0.0));
        }
    }
    Ok((x, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_recovers_diagonal_spectrum() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-3.0, 0.5),
        ]));
        let (vals, vecs) = eig(&m).unwrap();
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((sorted[0] - Complex64::new(-3.0, 0.5)).norm() < 1e-12);
        // Residual check A v = λ v.
        for (j, lam) in vals.iter().enumerate() {
            let v = vecs.column(j).clone_owned();
            let r = &m * &v - &v * *lam;
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_part_of_skew_matrix_is_zero() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 1.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(-2.0, 0.0),
                Complex64::new(0.0, -1.0),
            ],
        );
        // (m + m*)/2 = 0 for this skew-Hermitian matrix.
        assert!(hermitian_part_min_eig(&m).unwrap().abs() < 1e-14);
    }

    #[test]
    fn pseudo_solve_projects_out_null_space() {
        // G = diag(2, 0) pseudo-solve keeps only the first coordinate.
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        let b = DVector::from_vec(vec![Complex64::new(4.0, 0.0), Complex64::new(5.0, 0.0)]);
        let (x, rank) = pseudo_solve(&g, &b, 1e-10).unwrap();
        assert_eq!(rank, 1);
        assert!((x[0] - Complex64::new(2.0, 0.0)).norm() < 1e-13);
        assert!(x[1].norm() < 1e-13);
    }
}
