//! Divided differences, Loewner matrices and seminorm lower bounds over
//! finite spectrum sets.
//!
//! For Hermitian `A = U diag(lambda) U*` and `B = V diag(mu) V*` the
//! increment `f(A) - f(B)` written in the mixed eigenbasis is the Schur
//! product of the Loewner matrix `L[j][k] = (f(lambda_j) - f(mu_k)) /
//! (lambda_j - mu_k)` with `U* (A - B) V`. [`perturbation_identity_residual`]
//! measures how far a computed pair is from satisfying that identity.

mod search;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funlib::ScalarFunction;
use crate::opcalc::{apply_function, decompose, HermitianOperator, C64};

pub use search::{norm_comparison, seminorm_lower_bound, NormComparison, SeminormLowerBound, WitnessJson};

/// Relative tie threshold used by [`loewner_matrix`].
pub const DEFAULT_TIE_EPS: f64 = 1e-9;

/// `n` equispaced points of `[a, b]` including both endpoints. Grids of
/// sizes `n` and `2n - 1` are nested exactly.
pub(crate) fn equispaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * (i as f64 / (n - 1) as f64) })
        .collect()
}

/// Strictly increasing finite set of spectrum points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpectrumSet {
    points: Vec<f64>,
}

impl FiniteSpectrumSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("spectrum set must be non-empty".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("spectrum set must be finite".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("spectrum set must be strictly increasing".into()));
        }
        Ok(FiniteSpectrumSet { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nested refinement: the grid of size `2n - 1` over the same hull.
    /// Only meaningful for equispaced sets.
    pub fn refined(&self) -> Result<Self> {
        let n = self.len();
        if n < 2 {
            return Ok(self.clone());
        }
        restrict_to_grid(self.points[0], self.points[n - 1], 2 * n - 1)
    }
}

/// `n` equispaced points of `[a, b]`.
pub fn restrict_to_grid(a: f64, b: f64, n: usize) -> Result<FiniteSpectrumSet> {
    if !(a < b) || n < 2 || !a.is_finite() || !b.is_finite() {
        return Err(Error::BadInterval { a, b, n });
    }
    FiniteSpectrumSet::new(equispaced(a, b, n))
}

/// A divided difference and how the tie rule resolved it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividedDifference {
    pub value: f64,
    /// Set when the points tied and no analytic derivative was available.
    pub central_difference: bool,
}

pub(crate) fn divided_difference_full(f: &ScalarFunction, x: f64, y: f64, tie_eps: f64) -> Result<DividedDifference> {
    let fx = f.try_eval(x)?;
    let fy = f.try_eval(y)?;
    if (x - y).abs() > tie_eps * (1.0 + x.abs() + y.abs()) {
        return Ok(DividedDifference { value: (fx - fy) / (x - y), central_difference: false });
    }
    if let Some(d) = f.derivative(x) {
        return Ok(DividedDifference { value: d, central_difference: false });
    }
    let h = tie_eps;
    let value = (f.try_eval(x + h)? - f.try_eval(x - h)?) / (2.0 * h);
    Ok(DividedDifference { value, central_difference: true })
}

/// `(f(x) - f(y)) / (x - y)`, or the derivative at `x` when the points tie
/// within `tie_eps * (1 + |x| + |y|)`.
pub fn divided_difference(f: &ScalarFunction, x: f64, y: f64, tie_eps: f64) -> Result<f64> {
    divided_difference_full(f, x, y, tie_eps).map(|d| d.value)
}

/// Matrix of divided differences with rows on `lambda` and columns on `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerMatrix {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub entries: DMatrix<f64>,
    /// Number of entries resolved by a central difference.
    pub central_difference_ties: usize,
}

pub fn loewner_matrix(f: &ScalarFunction, lambda: &[f64], mu: &[f64]) -> Result<LoewnerMatrix> {
    let mut entries = DMatrix::zeros(lambda.len(), mu.len());
    let mut ties = 0;
    for (j, &x) in lambda.iter().enumerate() {
        for (k, &y) in mu.iter().enumerate() {
            let d = divided_difference_full(f, x, y, DEFAULT_TIE_EPS)?;
            ties += d.central_difference as usize;
            entries[(j, k)] = d.value;
        }
    }
    Ok(LoewnerMatrix { rows: lambda.to_vec(), cols: mu.to_vec(), entries, central_difference_ties: ties })
}

/// Residual of the identity with caller-supplied `f(A)` and `f(B)`.
pub fn perturbation_identity_residual_from(
    f: &ScalarFunction,
    a: &HermitianOperator,
    b: &HermitianOperator,
    fa: &DMatrix<C64>,
    fb: &DMatrix<C64>,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let da = decompose(a)?;
    let db = decompose(b)?;
    let (u, v) = (&da.eigenvectors, &db.eigenvectors);
    let lhs = u.adjoint() * (fa - fb) * v;
    let mixed = u.adjoint() * a.difference(b)? * v;
    let l = loewner_matrix(f, da.eigenvalues.as_slice(), db.eigenvalues.as_slice())?;
    let n = a.dim();
    let mut worst = 0.0f64;
    for k in 0..n {
        for j in 0..n {
            let r = lhs[(j, k)] - mixed[(j, k)] * l.entries[(j, k)];
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

/// Largest entry of `U*(f(A) - f(B))V - L o (U*(A - B)V)` in the eigenbases
/// of `A` and `B`.
pub fn perturbation_identity_residual(f: &ScalarFunction, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    let fa = apply_function(f, a)?;
    let fb = apply_function(f, b)?;
    perturbation_identity_residual_from(f, a, b, fa.matrix(), fb.matrix())
}
