use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense self-adjoint matrix.
///
/// The stored entries satisfy `m[j][k] == conj(m[k][j])` bit for bit: every
/// constructor replaces its input with `(M + M*) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

fn check_finite(m: &DMatrix<C64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5)
}

impl HermitianOperator {
    /// Validates shape and finiteness, then symmetrizes.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        check_finite(&m)?;
        Ok(HermitianOperator { m: symmetrize(&m) })
    }

    /// Like [`new`](Self::new) but rejects inputs whose asymmetry
    /// `max |m[j][k] - conj(m[k][j])|` exceeds `tol * max(1, max |m|)`.
    pub fn new_strict(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        check_finite(&m)?;
        let asymmetry = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tolerance = tol * m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if asymmetry > tolerance {
            return Err(Error::NotHermitian { asymmetry, tolerance });
        }
        Self::new(m)
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    /// Builds from real rows; convenient in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: r.len() });
        }
        Self::from_real(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_real(DMatrix::from_fn(n, n, |r, c| if r == c { values[r] } else { 0.0 }))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|c| (0..n).all(|r| r == c || self.m[(r, c)] == C64::new(0.0, 0.0)))
    }

    /// Diagonal entries as reals (imaginary parts vanish after symmetrization).
    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self - other` as a plain matrix (Hermitian up to rounding).
    pub fn difference(&self, other: &HermitianOperator) -> Result<DMatrix<C64>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(&self.m - &other.m)
    }

    /// `self + t (other - self)`.
    pub fn toward(&self, other: &HermitianOperator, t: f64) -> Result<HermitianOperator> {
        let d = other.difference(self)?;
        HermitianOperator::new(&self.m + d * C64::new(t, 0.0))
    }

    /// Strict parse from the exchange format; asymmetric input is rejected.
    pub fn from_exchange(json: &MatrixJson) -> Result<Self> {
        let n = json.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&json.re) || json.im.as_ref().is_some_and(|im| !rows_ok(im)) {
            return Err(Error::InvalidArgument(format!("matrix rows do not match dim = {n}")));
        }
        let m = DMatrix::from_fn(n, n, |r, c| {
            let im = json.im.as_ref().map_or(0.0, |im| im[r][c]);
            C64::new(json.re[r][c], im)
        });
        Self::new_strict(m, 1e-12)
    }

    pub fn to_exchange(&self) -> MatrixJson {
        let n = self.dim();
        let re = (0..n).map(|r| (0..n).map(|c| self.m[(r, c)].re).collect()).collect();
        let im = (!self.is_real()).then(|| (0..n).map(|r| (0..n).map(|c| self.m[(r, c)].im).collect()).collect());
        MatrixJson { dim: n, re, im }
    }
}

/// Matrix exchange format: `{"dim": n, "re": [[...]], "im": [[...]]}`, with
/// `"im"` optional and defaulting to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}
