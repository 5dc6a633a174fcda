//! Numerical workbench for functions of self-adjoint matrices under
//! trace-class perturbations.
//!
//! * [`opcalc`]: functional calculus, Schatten norms, increment ratios.
//! * [`funlib`]: the catalog of scalar test functions.
//! * [`loewner`]: divided differences and seminorm lower-bound search.
//! * [`construct`]: segment refinement, direct-sum amplification and
//!   divergent block families.
//! * [`commuting`]: the scalar-sequence version for commuting operators.

pub mod commuting;
pub mod construct;
pub mod error;
pub mod funlib;
pub mod loewner;
pub mod opcalc;
pub mod sampling;
pub mod multiplicity;

#[cfg(test)]
pub(crate) mod testutil;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/functional-calculus.md")]
    mod functional_calculus {}
    #[doc = include_str!("../../../book/src/norms-and-ratios.md")]
    mod norms_and_ratios {}
    #[doc = include_str!("../../../book/src/loewner.md")]
    mod loewner {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/commuting.md")]
    mod commuting {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub use error::{Error, Result};
pub use funlib::{get_function, FunctionRef, ScalarFunction};
pub use opcalc::{HermitianOperator, NormKind, RatioWitness};
