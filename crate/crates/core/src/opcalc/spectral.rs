use nalgebra::{DMatrix, DVector};

use super::operator::{HermitianOperator, C64};
use crate::error::{Error, Result};
use crate::funlib::ScalarFunction;

const EIGEN_TOL: f64 = 1e-10;

/// `A = U diag(eigenvalues) U*` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    /// `U diag(g) U*`, symmetrized. A constant `g` gives `g I` exactly.
    pub fn synthesize(&self, values: &[f64]) -> Result<HermitianOperator> {
        if let Some(&c) = values.first() {
            if values.iter().all(|v| v.to_bits() == c.to_bits()) {
                return HermitianOperator::diagonal(&vec![c; values.len()]);
            }
        }
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        HermitianOperator::new(scaled * u.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn eigen_raw(m: &DMatrix<C64>, real: bool) -> Option<(DVector<f64>, DMatrix<C64>)> {
    if real {
        let re = m.map(|z| z.re);
        let e = re.try_symmetric_eigen(f64::EPSILON, 10_000)?;
        Some((e.eigenvalues, e.eigenvectors.map(|x| C64::new(x, 0.0))))
    } else {
        let e = m.clone().try_symmetric_eigen(f64::EPSILON, 10_000)?;
        Some((e.eigenvalues, e.eigenvectors))
    }
}

/// Spectral decomposition with the unitarity and reconstruction checks
/// applied to the result.
pub fn decompose(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let m = a.matrix();
    let (values, vectors) = if a.is_diagonal() {
        (DVector::from_vec(a.diagonal_values()), DMatrix::identity(n, n))
    } else {
        eigen_raw(m, a.is_real()).ok_or(Error::ConvergenceFailure { residual: f64::INFINITY })?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);

    let ortho = (eigenvectors.adjoint() * &eigenvectors - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let d = SpectralDecomposition { eigenvalues, eigenvectors };
    let rebuilt = {
        let mut scaled = d.eigenvectors.clone();
        for j in 0..n {
            scaled.column_mut(j).scale_mut(d.eigenvalues[j]);
        }
        scaled * d.eigenvectors.adjoint()
    };
    let recon = (rebuilt - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = a.max_abs().max(1.0);
    if ortho > EIGEN_TOL || recon > EIGEN_TOL * scale {
        return Err(Error::ConvergenceFailure { residual: ortho.max(recon / scale) });
    }
    Ok(d)
}

/// Eigenvalues of a matrix that is Hermitian up to rounding, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    let real = m.iter().all(|z| z.im == 0.0);
    let mut v: Vec<f64> = if real {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        let sym = DMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::ConvergenceFailure { residual: f64::NAN });
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Applies `g` to the spectrum. Diagonal operators are mapped entrywise.
fn spectral_map<G>(a: &HermitianOperator, mut g: G) -> Result<HermitianOperator>
where
    G: FnMut(f64) -> Result<f64>,
{
    if a.is_diagonal() {
        let values = a.diagonal_values().into_iter().map(&mut g).collect::<Result<Vec<_>>>()?;
        return HermitianOperator::diagonal(&values);
    }
    let d = decompose(a)?;
    let values = d.eigenvalues.iter().map(|&x| g(x)).collect::<Result<Vec<_>>>()?;
    d.synthesize(&values)
}

/// `f(A) = U diag(f(lambda)) U*`.
pub fn apply_function(f: &ScalarFunction, a: &HermitianOperator) -> Result<HermitianOperator> {
    spectral_map(a, |x| f.try_eval(x))
}

/// `A chi_[-delta, delta](A)` and the number of eigenvalues removed.
pub fn spectral_truncation(a: &HermitianOperator, delta: f64) -> Result<(HermitianOperator, usize)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation level must be positive, got {delta}")));
    }
    let mut discarded = 0;
    let truncated = spectral_map(a, |x| {
        if x.abs() <= delta {
            Ok(x)
        } else {
            discarded += 1;
            Ok(0.0)
        }
    })?;
    Ok((truncated, discarded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funlib::get_function;
    use crate::testutil::{matrix_poly, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_entry(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&HermitianOperator::diagonal(&[3.0, -1.0]).unwrap()).unwrap();
        assert_eq!(d.eigenvalues.as_slice(), &[-1.0, 3.0]);
        assert_eq!(d.eigenvectors[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(d.eigenvectors[(0, 1)], C64::new(1.0, 0.0));

        let swap = HermitianOperator::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let d = decompose(&swap).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14 && (d.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (1, -1)/sqrt 2 up to phase
        let v0 = d.eigenvectors.column(0);
        let overlap = (v0[0] * s - v0[1] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-12);

        let z = decompose(&HermitianOperator::zeros(3).unwrap()).unwrap();
        assert_eq!(z.eigenvalues.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn decomposition_invariants_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let a = random_hermitian(&mut rng, 2 + i % 7, i % 2 == 0);
            let d = decompose(&a).unwrap();
            let n = a.dim();
            assert!(d.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
            let u = &d.eigenvectors;
            assert!(max_entry(&(u.adjoint() * u - DMatrix::identity(n, n))) <= 1e-10);
            let back = d.synthesize(d.eigenvalues.as_slice()).unwrap();
            assert!(max_entry(&(back.matrix() - a.matrix())) <= 1e-10 * a.max_abs().max(1.0));
        }
    }

    #[test]
    fn apply_function_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 5, false);
        let id = get_function("identity", &[]).unwrap();
        assert!(max_entry(&(apply_function(&id, &a).unwrap().matrix() - a.matrix())) <= 1e-10);

        let sq = get_function("poly", &[0.0, 0.0, 1.0]).unwrap();
        let swap = HermitianOperator::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let i2 = apply_function(&sq, &swap).unwrap();
        assert!(max_entry(&(i2.matrix() - DMatrix::identity(2, 2))) <= 1e-14);

        let abs = get_function("abs", &[]).unwrap();
        let r = apply_function(&abs, &HermitianOperator::diagonal(&[-3.0, 2.0]).unwrap()).unwrap();
        assert_eq!(r, HermitianOperator::diagonal(&[3.0, 2.0]).unwrap());
    }

    #[test]
    fn apply_function_domain_error() {
        let log = ScalarFunction::custom("ln", f64::ln);
        let a = HermitianOperator::diagonal(&[-1.0, 2.0]).unwrap();
        assert!(matches!(apply_function(&log, &a), Err(Error::DomainError { .. })));
    }

    #[test]
    fn polynomial_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs = [0.5, -1.0, 2.0, 0.25, -0.75];
        let f = get_function("poly", &coeffs).unwrap();
        for i in 0..50 {
            let a = random_hermitian(&mut rng, 2 + i % 7, i % 3 == 0);
            let direct = matrix_poly(a.matrix(), &coeffs);
            let via = apply_function(&f, &a).unwrap();
            let op = super::super::norms::schatten_norm(a.matrix(), super::super::norms::SchattenP::Inf).unwrap();
            assert!(max_entry(&(via.matrix() - direct)) <= 1e-9 * (1.0 + op).powi(4));
        }
    }

    #[test]
    fn truncation_examples() {
        let a = HermitianOperator::diagonal(&[0.1, 0.5, 2.0]).unwrap();
        let (t, r) = spectral_truncation(&a, 1.0).unwrap();
        assert_eq!(t, HermitianOperator::diagonal(&[0.1, 0.5, 0.0]).unwrap());
        assert_eq!(r, 1);
        let (t, r) = spectral_truncation(&a, 2.0).unwrap();
        assert_eq!((t, r), (a.clone(), 0));
        let z = HermitianOperator::zeros(3).unwrap();
        assert_eq!(spectral_truncation(&z, 0.5).unwrap(), (z, 0));
        assert!(spectral_truncation(&a, 0.0).is_err());
    }

    #[test]
    fn truncation_spectrum_and_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..40 {
            let a = random_hermitian(&mut rng, 2 + i % 7, i % 2 == 1);
            let delta = 0.2 + 0.1 * (i % 8) as f64;
            let (t, r) = spectral_truncation(&a, delta).unwrap();
            for x in hermitian_eigenvalues(t.matrix()).unwrap() {
                assert!(x.abs() <= delta + 1e-12);
            }
            let rest = hermitian_eigenvalues(&(a.matrix() - t.matrix())).unwrap();
            let rank = rest.iter().filter(|x| x.abs() > 1e-10).count();
            assert_eq!(rank, r);
        }
    }
}
