use nalgebra::DMatrix;

use crate::opcalc::C64;
pub(crate) use crate::sampling::random_hermitian;

/// Horner evaluation of a matrix polynomial with ascending coefficients.
pub(crate) fn matrix_poly(a: &DMatrix<C64>, coeffs: &[f64]) -> DMatrix<C64> {
    let n = a.nrows();
    let eye = DMatrix::<C64>::identity(n, n);
    coeffs.iter().rev().fold(DMatrix::zeros(n, n), |acc, &c| acc * a + &eye * C64::new(c, 0.0))
}
