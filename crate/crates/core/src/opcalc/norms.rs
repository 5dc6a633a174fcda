use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::operator::C64;
use super::spectral::hermitian_eigenvalues;
use crate::error::{Error, Result};

/// Supported Schatten exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchattenP {
    /// Trace norm, sum of singular values.
    One,
    /// Frobenius norm.
    Two,
    /// Operator norm, largest singular value.
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchattenNorm {
    pub p: SchattenP,
    pub value: f64,
}

impl SchattenNorm {
    pub fn of(x: &DMatrix<C64>, p: SchattenP) -> Result<Self> {
        Ok(SchattenNorm { p, value: schatten_norm(x, p)? })
    }
}

fn fold(singular: impl Iterator<Item = f64>, p: SchattenP) -> f64 {
    match p {
        SchattenP::One => singular.sum(),
        SchattenP::Two => singular.map(|s| s * s).sum::<f64>().sqrt(),
        SchattenP::Inf => singular.fold(0.0, f64::max),
    }
}

/// Schatten norm of an arbitrary (not necessarily square or Hermitian)
/// matrix, computed from its singular values.
pub fn schatten_norm(x: &DMatrix<C64>, p: SchattenP) -> Result<f64> {
    for c in 0..x.ncols() {
        for r in 0..x.nrows() {
            let z = x[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    if p == SchattenP::Two {
        return Ok(x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    if x.nrows() == 1 && x.ncols() == 1 {
        return Ok(x[(0, 0)].norm());
    }
    let sv = x.clone().try_svd(false, false, f64::EPSILON, 10_000).ok_or(Error::ConvergenceFailure { residual: f64::NAN })?;
    Ok(fold(sv.singular_values.iter().copied(), p))
}

/// Schatten norm of a Hermitian matrix from the moduli of its eigenvalues.
pub(crate) fn hermitian_schatten(x: &DMatrix<C64>, p: SchattenP) -> Result<f64> {
    if x.nrows() == 1 {
        return Ok(x[(0, 0)].norm());
    }
    let ev = hermitian_eigenvalues(x)?;
    Ok(fold(ev.into_iter().map(f64::abs), p))
}

/// All three Schatten norms of a Hermitian matrix from one eigenvalue solve.
pub(crate) fn hermitian_norms(x: &DMatrix<C64>) -> Result<(f64, f64)> {
    if x.nrows() == 1 {
        let v = x[(0, 0)].norm();
        return Ok((v, v));
    }
    let ev = hermitian_eigenvalues(x)?;
    let abs: Vec<f64> = ev.into_iter().map(f64::abs).collect();
    Ok((fold(abs.iter().copied(), SchattenP::One), fold(abs.iter().copied(), SchattenP::Inf)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_hermitian, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PS: [SchattenP; 3] = [SchattenP::One, SchattenP::Two, SchattenP::Inf];

    fn real(rows: &[&[f64]]) -> DMatrix<C64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| C64::new(rows[r][c], 0.0))
    }

    #[test]
    fn examples() {
        let d = real(&[&[1.0, 0.0, 0.0], &[0.0, -2.0, 0.0], &[0.0, 0.0, 3.0]]);
        assert!((schatten_norm(&d, SchattenP::One).unwrap() - 6.0).abs() < 1e-14);
        let s = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((schatten_norm(&s, SchattenP::Two).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // u u* with |u|^2 = 5
        let u = DMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let r1 = &u * u.adjoint();
        assert!((schatten_norm(&r1, SchattenP::Inf).unwrap() - 5.0).abs() < 1e-13);
        assert!((hermitian_schatten(&r1, SchattenP::One).unwrap() - 5.0).abs() < 1e-13);
    }

    #[test]
    fn non_finite_rejected() {
        let x = real(&[&[1.0, f64::INFINITY], &[0.0, 1.0]]);
        assert!(matches!(schatten_norm(&x, SchattenP::One), Err(Error::NonFinite { row: 0, col: 1 })));
    }

    #[test]
    fn rectangular_and_zero() {
        let x = real(&[&[3.0, 0.0, 0.0], &[0.0, 4.0, 0.0]]);
        assert!((schatten_norm(&x, SchattenP::One).unwrap() - 7.0).abs() < 1e-14);
        assert_eq!(schatten_norm(&DMatrix::zeros(3, 3), SchattenP::One).unwrap(), 0.0);
    }

    #[test]
    fn hermitian_path_agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for i in 0..50 {
            let a = random_hermitian(&mut rng, 1 + i % 8, i % 2 == 0);
            for p in PS {
                let s = schatten_norm(a.matrix(), p).unwrap();
                let h = hermitian_schatten(a.matrix(), p).unwrap();
                assert!((s - h).abs() <= 1e-12 * s.max(1.0));
            }
        }
    }

    #[test]
    fn unitary_invariance_and_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for i in 0..50 {
            let n = 2 + i % 7;
            let x = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let q = random_unitary(&mut rng, n);
            let rotated = &q * &x * q.adjoint();
            let v: Vec<f64> = PS.iter().map(|&p| schatten_norm(&x, p).unwrap()).collect();
            for (k, &p) in PS.iter().enumerate() {
                let w = schatten_norm(&rotated, p).unwrap();
                assert!((w - v[k]).abs() <= 1e-9 * v[k]);
            }
            let (one, two, inf) = (v[0], v[1], v[2]);
            assert!(inf <= two * (1.0 + 1e-12) && two <= one * (1.0 + 1e-12) && one <= n as f64 * inf * (1.0 + 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn triangle_inequality(seed in 0u64..10_000, n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = || DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (x, y) = (m(), m());
            for p in PS {
                let lhs = schatten_norm(&(&x + &y), p).unwrap();
                let rhs = schatten_norm(&x, p).unwrap() + schatten_norm(&y, p).unwrap();
                proptest::prop_assert!(lhs <= rhs * (1.0 + 1e-10));
            }
        }
    }
}
