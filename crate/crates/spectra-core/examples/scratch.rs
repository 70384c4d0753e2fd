use num_complex::Complex64;
use spectra_core::hardy::*;
use spectra_core::monodromy::*;
use spectra_core::operator::*;

fn mathieu(d: StripDomain, n: usize) -> PeriodicOperator {
    let a2 = CoefficientMatrix::scalar(HardyFunction::constant(d, n, Complex64::new(-1.0, 0.0)).unwrap());
    let zero = CoefficientMatrix::scalar(HardyFunction::zero(d, n).unwrap());
    let pot = CoefficientMatrix::scalar(HardyFunction::from_modes(d, n, &[
        (2, Complex64::new(1.0, 0.0)), (-2, Complex64::new(1.0, 0.0)), (0, Complex64::new(1.0, 0.0))]).unwrap());
    PeriodicOperator::new_standard(Some(a2), zero, pot).unwrap()
}

fn main() {
    let d = StripDomain::new(0.5).unwrap();
    let op = mathieu(d, 64);
    let rect = Rectangle::new(0.0, 2.5, -1.0, 1.0);
    match locate_eigenvalues(&op, rect, LocateOptions::default()) {
        Ok(out) => {
            for e in &out.eigenvalues { println!("λ = {} x{}", e.lambda, e.multiplicity); }
        }
        Err(e) => println!("error {e}"),
    }
}
