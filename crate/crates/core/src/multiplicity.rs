//! Arbitrary-precision block multiplicities.
//!
//! A multiplicity `N` is never materialized as a matrix; aggregate norms are
//! `N * (block norm)`, evaluated from the exact product and rounded once.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{Float, One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Positive integer multiplicity of a direct-sum block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiplicity(BigUint);

/// `(m, e)` with `x = m * 2^e` exactly, for finite positive `x`.
fn dyadic(x: f64) -> (u64, i32) {
    let (m, e, _) = Float::integer_decode(x);
    (m, e as i32)
}

impl Multiplicity {
    pub fn new(n: BigUint) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::InvalidArgument("multiplicity must be positive".into()));
        }
        Ok(Multiplicity(n))
    }

    pub fn from_u64(n: u64) -> Result<Self> {
        Self::new(BigUint::from(n))
    }

    /// `floor(1 / x)` computed exactly from the binary value of `x`.
    /// Returns zero for `x > 1`.
    pub fn floor_reciprocal(x: f64) -> Result<BigUint> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("reciprocal of non-positive or non-finite {x}")));
        }
        let (m, e) = dyadic(x);
        if e > 0 {
            return Ok(BigUint::zero());
        }
        Ok((BigUint::one() << (-e) as u32) / BigUint::from(m))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// `N * x`, exact product rounded to the nearest representable double.
    pub fn times(&self, x: f64) -> f64 {
        if x == 0.0 || !x.is_finite() {
            return self.0.to_f64().unwrap_or(f64::INFINITY) * x;
        }
        let (m, e) = dyadic(x.abs());
        let product = &self.0 * BigUint::from(m);
        // Keep the mantissa within 64 bits so the single rounding happens in
        // the conversion below.
        let bits = product.bits() as i32;
        let shift = (bits - 64).max(0);
        let top = &product >> shift as u32;
        let sticky = if shift > 0 && (&top << shift as u32) != product { 1u64 } else { 0 };
        let mantissa = top.to_u64().expect("fits in 64 bits") | sticky;
        let magnitude = mantissa as f64 * 2f64.powi(e + shift);
        magnitude.copysign(x)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}
