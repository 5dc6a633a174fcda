use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::norms::{hermitian_norms, hermitian_schatten, SchattenP};
use super::operator::{HermitianOperator, C64};
use super::spectral::{apply_function, decompose, hermitian_eigenvalues, spectral_truncation, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::funlib::{FunctionRef, ScalarFunction};

/// Which norm a ratio is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Operator,
    Schatten1,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Operator => "operator",
            NormKind::Schatten1 => "schatten1",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "operator" => Ok(NormKind::Operator),
            "schatten1" => Ok(NormKind::Schatten1),
            other => Err(Error::InvalidArgument(format!("unknown norm kind `{other}`"))),
        }
    }
}

/// A pair `(A, B)` with the increment ratios of `f` on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioWitness {
    pub a: HermitianOperator,
    pub b: HermitianOperator,
    pub function: FunctionRef,
    /// `||f(B) - f(A)||_1 / ||B - A||_1`
    pub ratio_s1: f64,
    /// `||f(B) - f(A)|| / ||B - A||`
    pub ratio_op: f64,
    pub increment_s1: f64,
    pub increment_op: f64,
    pub perturbation_s1: f64,
    pub perturbation_op: f64,
}

impl RatioWitness {
    pub fn ratio(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Operator => self.ratio_op,
            NormKind::Schatten1 => self.ratio_s1,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    fn assemble(
        f: &ScalarFunction,
        a: HermitianOperator,
        b: HermitianOperator,
        fa: &HermitianOperator,
        fb: &HermitianOperator,
        scale: f64,
    ) -> Result<Self> {
        let d = b.difference(&a)?;
        let (perturbation_s1, perturbation_op) = hermitian_norms(&d)?;
        let threshold = 1e-14 * a.dim() as f64 * scale;
        if perturbation_s1 <= threshold {
            return Err(Error::DegeneratePair { norm: perturbation_s1, threshold });
        }
        let e = fb.difference(fa)?;
        let (increment_s1, increment_op) = hermitian_norms(&e)?;
        Ok(RatioWitness {
            a,
            b,
            function: f.reference(),
            ratio_s1: increment_s1 / perturbation_s1,
            ratio_op: increment_op / perturbation_op,
            increment_s1,
            increment_op,
            perturbation_s1,
            perturbation_op,
        })
    }

    /// Witness for the 1x1 pair `(t)`, `(s)`. Exact, so only `t = s` counts
    /// as degenerate.
    pub fn scalar(f: &ScalarFunction, t: f64, s: f64) -> Result<Self> {
        if t == s {
            return Err(Error::DegeneratePair { norm: 0.0, threshold: 0.0 });
        }
        let (ft, fs) = (f.try_eval(t)?, f.try_eval(s)?);
        let perturbation = (s - t).abs();
        let increment = (fs - ft).abs();
        Ok(RatioWitness {
            a: HermitianOperator::diagonal(&[t])?,
            b: HermitianOperator::diagonal(&[s])?,
            function: f.reference(),
            ratio_s1: increment / perturbation,
            ratio_op: increment / perturbation,
            increment_s1: increment,
            increment_op: increment,
            perturbation_s1: perturbation,
            perturbation_op: perturbation,
        })
    }

    /// Witness for `A = diag(a)`, `B = Q diag(b) Q*`, using the known spectra
    /// instead of decomposing `B` again.
    pub(crate) fn from_spectra(f: &ScalarFunction, a: &[f64], b: &[f64], q: &DMatrix<C64>) -> Result<Self> {
        let fa_vals = a.iter().map(|&x| f.try_eval(x)).collect::<Result<Vec<_>>>()?;
        let fb_vals = b.iter().map(|&x| f.try_eval(x)).collect::<Result<Vec<_>>>()?;
        let basis = SpectralDecomposition { eigenvalues: b.to_vec().into(), eigenvectors: q.clone() };
        let a_op = HermitianOperator::diagonal(a)?;
        let fa = HermitianOperator::diagonal(&fa_vals)?;
        let b_op = basis.synthesize(b)?;
        let fb = basis.synthesize(&fb_vals)?;
        let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
        Self::assemble(f, a_op, b_op, &fa, &fb, scale)
    }
}

/// `max(1, ||A||, ||B||)` from the spectra.
fn spectral_scale(da: &SpectralDecomposition, db: &SpectralDecomposition) -> f64 {
    da.eigenvalues.iter().chain(db.eigenvalues.iter()).fold(1.0f64, |m, x| m.max(x.abs()))
}

fn map_spectrum(f: &ScalarFunction, d: &SpectralDecomposition) -> Result<HermitianOperator> {
    let values = d.eigenvalues.iter().map(|&x| f.try_eval(x)).collect::<Result<Vec<_>>>()?;
    d.synthesize(&values)
}

/// Increment ratios of `f` on the pair `(A, B)`.
pub fn increment_ratio(f: &ScalarFunction, a: &HermitianOperator, b: &HermitianOperator) -> Result<RatioWitness> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let da = decompose(a)?;
    let db = decompose(b)?;
    let scale = spectral_scale(&da, &db);
    let fa = map_spectrum(f, &da)?;
    let fb = map_spectrum(f, &db)?;
    RatioWitness::assemble(f, a.clone(), b.clone(), &fa, &fb, scale)
}

/// Pieces of the truncation argument for one pair `(A, B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceTransferReport {
    pub delta: f64,
    /// `f(0)` before normalization.
    pub shift: f64,
    pub discarded_rank_a: usize,
    pub discarded_rank_b: usize,
    /// `||f(A) - f(A_delta)||_1` and its numerical rank.
    pub tail_a_s1: f64,
    pub tail_a_rank: usize,
    pub tail_b_s1: f64,
    pub tail_b_rank: usize,
    /// `||f(A_delta) - f(B_delta)||_1`
    pub core_s1: f64,
    /// `||f(A) - f(B)||_1`
    pub total_s1: f64,
    pub reassembly_residual: f64,
    pub scale: f64,
}

impl TraceTransferReport {
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.scale
    }

    /// Residual within tolerance and both tails no larger in rank than the
    /// discarded part of the spectrum.
    pub fn passes(&self) -> bool {
        self.reassembly_residual <= self.tolerance()
            && self.tail_a_rank <= self.discarded_rank_a
            && self.tail_b_rank <= self.discarded_rank_b
    }
}

fn numerical_rank(x: &DMatrix<C64>, scale: f64) -> Result<usize> {
    let tol = 1e-10 * scale;
    Ok(hermitian_eigenvalues(x)?.into_iter().filter(|v| v.abs() > tol).count())
}

/// Splits `f(A) - f(B)` through the spectral truncations at level `delta`
/// and measures every piece. `f` is normalized to `f(0) = 0` first.
pub fn trace_transfer_check(
    f: &ScalarFunction,
    delta: f64,
    a: &HermitianOperator,
    b: &HermitianOperator,
) -> Result<TraceTransferReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let shift = f.try_eval(0.0)?;
    let g = f.shifted(shift);
    let (a_t, discarded_rank_a) = spectral_truncation(a, delta)?;
    let (b_t, discarded_rank_b) = spectral_truncation(b, delta)?;
    let ga = apply_function(&g, a)?;
    let gb = apply_function(&g, b)?;
    let ga_t = apply_function(&g, &a_t)?;
    let gb_t = apply_function(&g, &b_t)?;

    let scale = [a, b, &ga, &gb]
        .iter()
        .map(|x| hermitian_schatten(x.matrix(), SchattenP::Inf))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max);

    let tail_a = ga.difference(&ga_t)?;
    let tail_b = gb.difference(&gb_t)?;
    let core = ga_t.difference(&gb_t)?;
    let total = ga.difference(&gb)?;
    let residual = &total - (&tail_a + &core - &tail_b);

    Ok(TraceTransferReport {
        delta,
        shift,
        discarded_rank_a,
        discarded_rank_b,
        tail_a_s1: hermitian_schatten(&tail_a, SchattenP::One)?,
        tail_a_rank: numerical_rank(&tail_a, scale)?,
        tail_b_s1: hermitian_schatten(&tail_b, SchattenP::One)?,
        tail_b_rank: numerical_rank(&tail_b, scale)?,
        core_s1: hermitian_schatten(&core, SchattenP::One)?,
        total_s1: hermitian_schatten(&total, SchattenP::One)?,
        reassembly_residual: hermitian_schatten(&residual, SchattenP::One)?,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funlib::get_function;
    use crate::sampling::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(id: &str) -> ScalarFunction {
        get_function(id, &[]).unwrap()
    }

    #[test]
    fn identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..30 {
            let a = random_hermitian(&mut rng, 1 + i % 8, i % 2 == 0);
            let b = random_hermitian(&mut rng, 1 + i % 8, i % 3 == 0);
            let w = increment_ratio(&f("identity"), &a, &b).unwrap();
            assert!((w.ratio_s1 - 1.0).abs() <= 1e-12, "{}", w.ratio_s1);
            assert!((w.ratio_op - 1.0).abs() <= 1e-12);
            let c = get_function("constant", &[1.5]).unwrap();
            let w = increment_ratio(&c, &a, &b).unwrap();
            assert_eq!((w.ratio_s1, w.ratio_op), (0.0, 0.0));
        }
    }

    #[test]
    fn abs_on_reflection_pair_is_zero() {
        // |diag(1,-1)| = |[[0,1],[1,0]]| = I
        let a = HermitianOperator::diagonal(&[1.0, -1.0]).unwrap();
        let b = HermitianOperator::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let abs_b = apply_function(&f("abs"), &b).unwrap();
        let eye = DMatrix::<C64>::identity(2, 2);
        assert!((abs_b.matrix() - &eye).iter().all(|z| z.norm() < 1e-14));
        let w = increment_ratio(&f("abs"), &a, &b).unwrap();
        assert!(w.ratio_s1 < 1e-14);
        // ||B - A||_1 = 2 sqrt 2
        assert!((w.perturbation_s1 - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let a = HermitianOperator::diagonal(&[1.0, 2.0]).unwrap();
        assert!(matches!(increment_ratio(&f("abs"), &a, &a), Err(Error::DegeneratePair { .. })));
        let c = HermitianOperator::diagonal(&[1.0]).unwrap();
        assert!(matches!(increment_ratio(&f("abs"), &a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn from_spectra_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sin = f("sin");
        for n in 1..7 {
            let q = crate::sampling::random_unitary(&mut rng, n);
            let a: Vec<f64> = (0..n).map(|i| i as f64 * 0.3 - 0.5).collect();
            let b: Vec<f64> = (0..n).map(|i| 0.7 - i as f64 * 0.2).collect();
            let w = RatioWitness::from_spectra(&sin, &a, &b, &q).unwrap();
            let again = increment_ratio(&sin, &w.a, &w.b).unwrap();
            assert!((w.ratio_s1 - again.ratio_s1).abs() <= 1e-9 * w.ratio_s1);
            assert!((w.ratio_op - again.ratio_op).abs() <= 1e-9 * w.ratio_op);
        }
    }

    #[test]
    fn trace_transfer_examples() {
        let abs = f("abs");
        let a = HermitianOperator::diagonal(&[0.5, 3.0]).unwrap();
        let b = HermitianOperator::diagonal(&[0.4, 3.0]).unwrap();
        let r = trace_transfer_check(&abs, 1.0, &a, &b).unwrap();
        // f(A) - f(A_delta) = diag(0, 3)
        assert_eq!(r.tail_a_rank, 1);
        assert_eq!(r.discarded_rank_a, 1);
        assert!((r.tail_a_s1 - 3.0).abs() < 1e-14);
        assert!((r.core_s1 - 0.1).abs() < 1e-14);
        assert!(r.passes());

        let same = trace_transfer_check(&abs, 1.0, &a, &a).unwrap();
        assert_eq!((same.core_s1, same.total_s1, same.reassembly_residual), (0.0, 0.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for i in 0..20 {
            let a = random_hermitian(&mut rng, 2 + i % 6, i % 2 == 0);
            let b = random_hermitian(&mut rng, 2 + i % 6, i % 2 == 1);
            let r = trace_transfer_check(&f("identity"), 0.4, &a, &b).unwrap();
            assert!(r.reassembly_residual <= 1e-12 * r.scale);
            assert!(r.passes());
        }
    }

    #[test]
    fn trace_transfer_shifts_to_zero() {
        let s = get_function("smoothed_abs", &[0.5]).unwrap();
        let a = HermitianOperator::diagonal(&[0.1, 2.0]).unwrap();
        let b = HermitianOperator::diagonal(&[0.2, 2.0]).unwrap();
        let r = trace_transfer_check(&s, 1.0, &a, &b).unwrap();
        assert_eq!(r.shift, 0.5);
        // g(2) - g(0) with g = f - f(0), f(0) = 0.5
        assert!((r.tail_a_s1 - (2f64.hypot(0.5) - 0.5)).abs() < 1e-14);
    }
}
