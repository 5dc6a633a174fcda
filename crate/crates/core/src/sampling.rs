//! Seeded random operators used by the search and by the verification suites.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::opcalc::{HermitianOperator, C64};

/// Hermitian matrix with entries uniform in [-1, 1] (real and, when
/// `complex`, imaginary parts), symmetrized.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, complex: bool) -> HermitianOperator {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        let im = if complex { rng.random_range(-1.0..=1.0) } else { 0.0 };
        C64::new(rng.random_range(-1.0..=1.0), im)
    });
    HermitianOperator::new(m).expect("finite by construction")
}

/// Haar distributed unitary: QR of a complex Gaussian matrix with the phases
/// of R's diagonal moved into Q.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}
