//! Catalog of scalar test functions.
//!
//! Every entry carries its evaluation rule, an analytic derivative where one
//! exists, the points where that derivative is missing or discontinuous, and
//! a small block of theory metadata. The metadata is descriptive only: no
//! numerical kernel in this crate reads it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference to a catalog function as it appears in configuration files:
/// `{"id": "...", "params": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRef {
    pub id: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionRef {
    pub fn new(id: impl Into<String>, params: Vec<f64>) -> Self {
        FunctionRef { id: id.into(), params }
    }

    pub fn resolve(&self) -> Result<ScalarFunction> {
        get_function(&self.id, &self.params)
    }
}

/// Known facts about a function, recorded for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    /// Lipschitz constant on [-1, 1], when known in closed form.
    pub known_lipschitz_on_unit_interval: Option<f64>,
    /// Whether the function is operator Lipschitz on some [-d, d], when known.
    pub known_operator_lipschitz_near_zero: Option<bool>,
    pub citation_note: String,
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Identity,
    Constant(f64),
    /// Ascending coefficients: c0 + c1 x + c2 x^2 + ...
    Poly(Vec<f64>),
    Abs,
    SignedSquare,
    SqrtAbs,
    XSinInv,
    X2SinInv,
    Sin,
    Exp,
    SmoothedAbs(f64),
    Custom { eval: Eval, derivative: Option<Eval> },
    Shifted { inner: Arc<ScalarFunction>, offset: f64 },
}

/// A real-valued function of a real variable together with its catalog data.
#[derive(Clone)]
pub struct ScalarFunction {
    id: String,
    params: Vec<f64>,
    kind: Kind,
    kinks: Vec<f64>,
    metadata: Metadata,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("id", &self.id)
            .field("params", &self.params)
            .field("kinks", &self.kinks)
            .finish()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
}

impl ScalarFunction {
    /// A user supplied function. It carries no kinks and empty metadata.
    pub fn custom<F>(id: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ScalarFunction {
            id: id.into(),
            params: Vec::new(),
            kind: Kind::Custom { eval: Arc::new(eval), derivative: None },
            kinks: Vec::new(),
            metadata: Metadata {
                known_lipschitz_on_unit_interval: None,
                known_operator_lipschitz_near_zero: None,
                citation_note: "user supplied".into(),
            },
        }
    }

    /// Attach an analytic derivative to a custom function.
    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Kind::Custom { derivative: d, .. } = &mut self.kind {
            *d = Some(Arc::new(derivative));
        }
        self
    }

    /// `x -> f(x) - offset`, keeping id, params, kinks and metadata.
    pub fn shifted(&self, offset: f64) -> Self {
        ScalarFunction {
            id: self.id.clone(),
            params: self.params.clone(),
            kind: Kind::Shifted { inner: Arc::new(self.clone()), offset },
            kinks: self.kinks.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn reference(&self) -> FunctionRef {
        FunctionRef::new(self.id.clone(), self.params.clone())
    }

    /// Points where the derivative is absent or discontinuous.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Identity => x,
            Kind::Constant(c) => *c,
            Kind::Poly(c) => horner(c, x),
            Kind::Abs => x.abs(),
            Kind::SignedSquare => x * x.abs(),
            Kind::SqrtAbs => x.abs().sqrt(),
            Kind::XSinInv => {
                if x == 0.0 {
                    0.0
                } else {
                    x * (1.0 / x).sin()
                }
            }
            Kind::X2SinInv => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x * (1.0 / x).sin()
                }
            }
            Kind::Sin => x.sin(),
            Kind::Exp => x.exp(),
            Kind::SmoothedAbs(eps) => x.hypot(*eps),
            Kind::Custom { eval, .. } => eval(x),
            Kind::Shifted { inner, offset } => inner.eval(x) - offset,
        }
    }

    /// Evaluates and rejects non-finite results.
    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let y = self.eval(x);
        if y.is_finite() && x.is_finite() {
            Ok(y)
        } else {
            Err(Error::DomainError { function: self.id.clone(), at: x })
        }
    }

    /// Analytic derivative, `None` where it does not exist or is not provided.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Identity => Some(1.0),
            Kind::Constant(_) => Some(0.0),
            Kind::Poly(c) => Some(horner_derivative(c, x)),
            Kind::Abs => (x != 0.0).then(|| x.signum()),
            Kind::SignedSquare => Some(2.0 * x.abs()),
            Kind::SqrtAbs => (x != 0.0).then(|| x.signum() / (2.0 * x.abs().sqrt())),
            Kind::XSinInv => (x != 0.0).then(|| (1.0 / x).sin() - (1.0 / x).cos() / x),
            Kind::X2SinInv => Some(if x == 0.0 {
                0.0
            } else {
                2.0 * x * (1.0 / x).sin() - (1.0 / x).cos()
            }),
            Kind::Sin => Some(x.cos()),
            Kind::Exp => Some(x.exp()),
            Kind::SmoothedAbs(eps) => Some(x / x.hypot(*eps)),
            Kind::Custom { derivative, .. } => derivative.as_ref().map(|d| d(x)),
            Kind::Shifted { inner, .. } => inner.derivative(x),
        }
    }
}

fn no_params(id: &str, params: &[f64]) -> Result<()> {
    if params.is_empty() {
        Ok(())
    } else {
        Err(Error::BadParams { function: id.into(), reason: format!("takes no parameters, got {}", params.len()) })
    }
}

fn meta(lip: Option<f64>, ol: Option<bool>, note: &str) -> Metadata {
    Metadata {
        known_lipschitz_on_unit_interval: lip,
        known_operator_lipschitz_near_zero: ol,
        citation_note: note.into(),
    }
}

/// Looks up a catalog entry.
///
/// Catalog ids: `identity`, `constant` (`[c]`, default 0), `poly` (ascending
/// coefficients), `abs`, `signed_square` (x|x|), `sqrt_abs` (|x|^(1/2)),
/// `xsin_inv` (x sin(1/x), 0 at 0), `x2sin_inv` (x^2 sin(1/x), 0 at 0),
/// `sin`, `exp`, `smoothed_abs` (`[eps]`, sqrt(x^2 + eps^2)).
pub fn get_function(id: &str, params: &[f64]) -> Result<ScalarFunction> {
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::BadParams { function: id.into(), reason: format!("non-finite parameter {p}") });
    }
    let (kind, kinks, metadata) = match id {
        "identity" => {
            no_params(id, params)?;
            (Kind::Identity, vec![], meta(Some(1.0), Some(true), "f(B) - f(A) = B - A"))
        }
        "constant" => {
            let c = match params {
                [] => 0.0,
                [c] => *c,
                _ => {
                    return Err(Error::BadParams { function: id.into(), reason: "expects at most one value".into() })
                }
            };
            (Kind::Constant(c), vec![], meta(Some(0.0), Some(true), "increments vanish identically"))
        }
        "poly" => {
            if params.is_empty() {
                return Err(Error::BadParams { function: id.into(), reason: "needs at least one coefficient".into() });
            }
            (
                Kind::Poly(params.to_vec()),
                vec![],
                meta(None, Some(true), "polynomials are operator Lipschitz on bounded intervals"),
            )
        }
        "abs" => {
            no_params(id, params)?;
            (
                Kind::Abs,
                vec![0.0],
                meta(
                    Some(1.0),
                    Some(false),
                    "Lipschitz but not operator Lipschitz near 0: there are compact self-adjoint A, B \
                     with A - B trace class and |A| - |B| not trace class",
                ),
            )
        }
        "signed_square" => {
            no_params(id, params)?;
            (
                Kind::SignedSquare,
                vec![],
                meta(Some(2.0), Some(true), "derivative 2|x| is Lipschitz, so locally in B^1_{inf,1}"),
            )
        }
        "sqrt_abs" => {
            no_params(id, params)?;
            (Kind::SqrtAbs, vec![0.0], meta(None, Some(false), "not Lipschitz at 0"))
        }
        "xsin_inv" => {
            no_params(id, params)?;
            (Kind::XSinInv, vec![0.0], meta(None, Some(false), "not Lipschitz near 0: f'(x) ~ cos(1/x)/x"))
        }
        "x2sin_inv" => {
            no_params(id, params)?;
            (
                Kind::X2SinInv,
                vec![0.0],
                meta(None, None, "Lipschitz near 0 with |f'| <= 1 + 2|x|, derivative discontinuous at 0"),
            )
        }
        "sin" => {
            no_params(id, params)?;
            (Kind::Sin, vec![], meta(Some(1.0), Some(true), "entire, operator Lipschitz on bounded intervals"))
        }
        "exp" => {
            no_params(id, params)?;
            (
                Kind::Exp,
                vec![],
                meta(Some(std::f64::consts::E), Some(true), "entire, operator Lipschitz on bounded intervals"),
            )
        }
        "smoothed_abs" => {
            let eps = match params {
                [e] if *e > 0.0 => *e,
                _ => {
                    return Err(Error::BadParams { function: id.into(), reason: "expects one positive width".into() })
                }
            };
            (
                Kind::SmoothedAbs(eps),
                vec![],
                meta(
                    Some(1.0 / 1.0f64.hypot(eps)),
                    Some(true),
                    "real analytic; operator Lipschitz by smoothness (catalog fact, not computed)",
                ),
            )
        }
        other => return Err(Error::UnknownFunction(other.into())),
    };
    Ok(ScalarFunction { id: id.into(), params: params.to_vec(), kind, kinks, metadata })
}

/// Largest difference quotient of `f` over `grid_n` equispaced points of
/// `[a, b]`. All pairs are swept up to 2000 points, adjacent pairs above.
pub fn lipschitz_seminorm_estimate(f: &ScalarFunction, a: f64, b: f64, grid_n: usize) -> Result<f64> {
    if !(a < b) || grid_n < 2 || !a.is_finite() || !b.is_finite() {
        return Err(Error::BadInterval { a, b, n: grid_n });
    }
    let xs = crate::loewner::equispaced(a, b, grid_n);
    let ys = xs.iter().map(|&x| f.try_eval(x)).collect::<Result<Vec<_>>>()?;
    let quotient = |i: usize, j: usize| (ys[j] - ys[i]).abs() / (xs[j] - xs[i]);
    let mut best = 0.0f64;
    if grid_n <= 2000 {
        for i in 0..grid_n {
            for j in i + 1..grid_n {
                best = best.max(quotient(i, j));
            }
        }
    } else {
        for i in 0..grid_n - 1 {
            best = best.max(quotient(i, i + 1));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CATALOG: &[(&str, &[f64])] = &[
        ("identity", &[]),
        ("constant", &[2.5]),
        ("poly", &[1.0, -2.0, 0.0, 3.0]),
        ("abs", &[]),
        ("signed_square", &[]),
        ("sqrt_abs", &[]),
        ("xsin_inv", &[]),
        ("x2sin_inv", &[]),
        ("sin", &[]),
        ("exp", &[]),
        ("smoothed_abs", &[0.1]),
    ];

    #[test]
    fn catalog_examples() {
        let id = get_function("identity", &[]).unwrap();
        assert_eq!(id.eval(2.0), 2.0);
        assert_eq!(id.derivative(2.0), Some(1.0));
        assert_eq!(id.metadata().known_operator_lipschitz_near_zero, Some(true));

        let abs = get_function("abs", &[]).unwrap();
        assert_eq!(abs.eval(-3.0), 3.0);
        assert_eq!(abs.metadata().known_operator_lipschitz_near_zero, Some(false));
        assert_eq!(abs.kinks(), &[0.0]);
        assert_eq!(abs.derivative(0.0), None);

        let s = get_function("smoothed_abs", &[0.1]).unwrap();
        assert_eq!(s.eval(0.0), 0.1);
        assert_eq!(s.derivative(0.0), Some(0.0));

        assert_eq!(get_function("xsin_inv", &[]).unwrap().eval(0.0), 0.0);
        assert_eq!(get_function("xsin_inv", &[]).unwrap().derivative(0.0), None);
        assert_eq!(get_function("sqrt_abs", &[]).unwrap().kinks(), &[0.0]);
    }

    #[test]
    fn bad_lookups() {
        assert!(matches!(get_function("nope", &[]), Err(Error::UnknownFunction(_))));
        assert!(matches!(get_function("abs", &[1.0]), Err(Error::BadParams { .. })));
        assert!(matches!(get_function("smoothed_abs", &[]), Err(Error::BadParams { .. })));
        assert!(matches!(get_function("smoothed_abs", &[-0.1]), Err(Error::BadParams { .. })));
        assert!(matches!(get_function("poly", &[]), Err(Error::BadParams { .. })));
        assert!(matches!(get_function("poly", &[f64::NAN]), Err(Error::BadParams { .. })));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (id, params) in CATALOG {
            let f = get_function(id, params).unwrap();
            let mut checked = 0;
            while checked < 100 {
                let x: f64 = rng.random_range(-1.0..1.0);
                // xsin_inv and x2sin_inv oscillate on scale x^2 near 0
                if f.kinks().iter().any(|k| (x - k).abs() < 0.2) {
                    continue;
                }
                let h = 1e-6 * x.abs().max(1e-3).min(1.0) * x.abs().min(1.0);
                let h = h.max(1e-9);
                let cd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                let d = f.derivative(x).unwrap();
                assert!((d - cd).abs() <= 1e-6 * d.abs().max(1.0), "{id} at {x}: {d} vs {cd}");
                checked += 1;
            }
        }
    }

    #[test]
    fn poly_is_horner() {
        let c = [1.0, -2.0, 0.0, 3.0];
        let f = get_function("poly", &c).unwrap();
        for &x in &[-1.5, -0.3, 0.0, 0.7, 2.0] {
            let h = ((3.0 * x + 0.0) * x - 2.0) * x + 1.0;
            assert_eq!(f.eval(x), h);
        }
    }

    #[test]
    fn shifted_subtracts() {
        let f = get_function("smoothed_abs", &[0.5]).unwrap().shifted(0.5);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.derivative(0.3), get_function("smoothed_abs", &[0.5]).unwrap().derivative(0.3));
    }

    #[test]
    fn lipschitz_examples() {
        let id = get_function("identity", &[]).unwrap();
        assert!((lipschitz_seminorm_estimate(&id, -1.0, 1.0, 101).unwrap() - 1.0).abs() < 1e-12);
        let abs = get_function("abs", &[]).unwrap();
        assert!((lipschitz_seminorm_estimate(&abs, -1.0, 1.0, 101).unwrap() - 1.0).abs() < 1e-12);
        // adjacent quotient at 0 for sqrt: sqrt(h)/h with h = 1e-3
        let sq = get_function("sqrt_abs", &[]).unwrap();
        let est = lipschitz_seminorm_estimate(&sq, 0.0, 1.0, 1001).unwrap();
        let h: f64 = 1e-3;
        assert!((est - h.sqrt() / h).abs() < 1e-9, "{est}");
        assert!(lipschitz_seminorm_estimate(&sq, 0.0, 1.0, 4001).unwrap() > est);
        assert!(matches!(lipschitz_seminorm_estimate(&id, 1.0, 1.0, 3), Err(Error::BadInterval { .. })));
        assert!(matches!(lipschitz_seminorm_estimate(&id, 0.0, 1.0, 1), Err(Error::BadInterval { .. })));
    }

    proptest::proptest! {
        #[test]
        fn lipschitz_nested_grids_monotone(id in 0usize..11, n in 2usize..200, a in -2.0f64..0.0, w in 0.1f64..3.0) {
            let (name, params) = CATALOG[id];
            let f = get_function(name, params).unwrap();
            let coarse = lipschitz_seminorm_estimate(&f, a, a + w, n).unwrap();
            let fine = lipschitz_seminorm_estimate(&f, a, a + w, 2 * n - 1).unwrap();
            proptest::prop_assert!(fine >= coarse * (1.0 - 1e-12));
        }

        #[test]
        fn smoothed_abs_within_eps(x in -10.0f64..10.0, eps in 1e-6f64..1.0) {
            let f = get_function("smoothed_abs", &[eps]).unwrap();
            proptest::prop_assert!((f.eval(x) - x.abs()).abs() <= eps * (1.0 + 1e-15));
        }
    }
}
