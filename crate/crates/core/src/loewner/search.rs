//! Lower bounds for the operator-Lipschitz and trace-class-Lipschitz
//! seminorms of `f` on a finite spectrum set.
//!
//! Pairs have the form `A = diag(a)`, `B = Q diag(b) Q*` with `a`, `b` drawn
//! from the set and `Q` unitary; fixing `A` diagonal loses nothing because
//! every norm involved is unitarily invariant. The search probes every
//! scalar pair first, then runs `budget` seeded restarts, each one a
//! Givens-rotation coordinate ascent on `Q` with a golden-section line
//! search per coordinate. Small instances are swept exhaustively first and
//! the restarts begin at the best-scoring assignments.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::FiniteSpectrumSet;
use crate::error::{Error, Result};
use crate::funlib::ScalarFunction;
use crate::opcalc::{MatrixJson, NormKind, RatioWitness, C64};
use crate::sampling::random_unitary;

/// Coordinate-ascent sweeps per restart.
const SWEEPS: usize = 2;
/// Golden-section iterations per coordinate.
const GOLDEN_ITERS: usize = 24;
/// Spectra assignments are swept exhaustively, and restarts start from the
/// best of them, when `|F0|^(2 dim)` does not exceed this.
const SWEEP_LIMIT: f64 = 1e4;

/// Best ratio found, with the pair that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormLowerBound {
    /// Equal to `witness.ratio(norm_kind)`, or 0 when no pair exists.
    pub value: f64,
    /// `None` when every candidate pair is degenerate (a one-point set).
    pub witness: Option<RatioWitness>,
    pub norm_kind: NormKind,
    /// Restarts executed.
    pub budget_used: usize,
    /// Restart that produced the witness; `None` for the scalar probe.
    pub restart: Option<usize>,
    /// Largest scalar difference quotient on the set.
    pub scalar_floor: f64,
    pub seed: u64,
    pub budget: usize,
}

/// Witness file layout.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub function: String,
    pub params: Vec<f64>,
    pub norm_kind: NormKind,
    pub value: f64,
    #[serde(rename = "A")]
    pub a: Option<MatrixJson>,
    #[serde(rename = "B")]
    pub b: Option<MatrixJson>,
    pub seed: u64,
    pub budget: usize,
}

impl SeminormLowerBound {
    pub fn to_json(&self, f: &ScalarFunction) -> WitnessJson {
        WitnessJson {
            function: f.id().to_string(),
            params: f.params().to_vec(),
            norm_kind: self.norm_kind,
            value: self.value,
            a: self.witness.as_ref().map(|w| w.a.to_exchange()),
            b: self.witness.as_ref().map(|w| w.b.to_exchange()),
            seed: self.seed,
            budget: self.budget,
        }
    }
}

struct Candidate {
    ratio: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    q: DMatrix<C64>,
}

fn objective(f: &ScalarFunction, kind: NormKind, a: &[f64], b: &[f64], q: &DMatrix<C64>) -> Result<f64> {
    match RatioWitness::from_spectra(f, a, b, q) {
        Ok(w) => Ok(w.ratio(kind)),
        Err(Error::DegeneratePair { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Left factor applied to `Q`: a real rotation by `t` in the `(i, j)` plane
/// (`phase == false`) or `e^{it}` on coordinate `j` (`phase == true`).
fn givens(q: &DMatrix<C64>, i: usize, j: usize, phase: bool, t: f64) -> DMatrix<C64> {
    let mut out = q.clone();
    if phase {
        let p = C64::from_polar(1.0, t);
        for c in 0..q.ncols() {
            out[(j, c)] = q[(j, c)] * p;
        }
    } else {
        let (s, co) = t.sin_cos();
        for c in 0..q.ncols() {
            let (x, y) = (q[(i, c)], q[(j, c)]);
            out[(i, c)] = x * co - y * s;
            out[(j, c)] = x * s + y * co;
        }
    }
    out
}

/// Maximizes `g` on `[lo, hi]` by golden-section search; returns the best
/// point evaluated and its value.
fn golden_max<G: FnMut(f64) -> Result<f64>>(mut g: G, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut g1 = g(x1)?;
    let mut g2 = g(x2)?;
    let mut best = if g2 > g1 { (x2, g2) } else { (x1, g1) };
    for _ in 0..GOLDEN_ITERS {
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1)?;
            if g1 > best.1 {
                best = (x1, g1);
            }
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2)?;
            if g2 > best.1 {
                best = (x2, g2);
            }
        }
    }
    Ok(best)
}

/// Fixed unitaries shared by every swept assignment.
const SWEEP_PROBES: usize = 4;

struct Start {
    a: Vec<f64>,
    b: Vec<f64>,
    q: DMatrix<C64>,
}

/// Every assignment `(a, b)` scored against the identity and a few fixed
/// unitaries, best first (ties by enumeration index).
fn sweep(f: &ScalarFunction, points: &[f64], dim: usize, kind: NormKind, seed: u64) -> Result<Vec<Start>> {
    let m = points.len() as u64;
    let total = m.pow(2 * dim as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = vec![DMatrix::<C64>::identity(dim, dim)];
    probes.extend((0..SWEEP_PROBES).map(|_| random_unitary(&mut rng, dim)));
    let mut scored = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let mut digits = Vec::with_capacity(2 * dim);
            for _ in 0..2 * dim {
                digits.push(points[(c % m) as usize]);
                c /= m;
            }
            let b = digits.split_off(dim);
            let mut best = (f64::NEG_INFINITY, 0);
            for (p, q) in probes.iter().enumerate() {
                let v = objective(f, kind, &digits, &b, q)?;
                if v > best.0 {
                    best = (v, p);
                }
            }
            Ok((best.0, code, Start { a: digits, b, q: probes[best.1].clone() }))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    Ok(scored.into_iter().map(|(_, _, s)| s).collect())
}

fn restart(f: &ScalarFunction, points: &[f64], dim: usize, kind: NormKind, seed: u64, index: usize, start: Option<&Start>) -> Result<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let m = points.len();
    let (a, b, mut q) = match start {
        Some(s) => (s.a.clone(), s.b.clone(), s.q.clone()),
        None => {
            let mut draw = || (0..dim).map(|_| points[rng.random_range(0..m)]).collect::<Vec<_>>();
            let a = draw();
            let b = draw();
            (a, b, random_unitary(&mut rng, dim))
        }
    };
    let mut current = objective(f, kind, &a, &b, &q)?;
    for _ in 0..SWEEPS {
        for i in 0..dim {
            for j in i + 1..dim {
                for phase in [false, true] {
                    let (t, value) = golden_max(|t| objective(f, kind, &a, &b, &givens(&q, i, j, phase, t)), -FRAC_PI_2, FRAC_PI_2)?;
                    if value > current {
                        q = givens(&q, i, j, phase, t);
                        current = value;
                    }
                }
            }
        }
    }
    Ok(Candidate { ratio: current, a, b, q })
}

/// Searches for pairs with spectra in `set` maximizing the ratio of the
/// chosen kind. Deterministic in `(seed, budget)`; the value is
/// nondecreasing in `budget` for a fixed seed.
pub fn seminorm_lower_bound(
    f: &ScalarFunction,
    set: &FiniteSpectrumSet,
    dim: usize,
    norm_kind: NormKind,
    budget: usize,
    seed: u64,
) -> Result<SeminormLowerBound> {
    if dim == 0 || budget == 0 {
        return Err(Error::InvalidArgument(format!("dim and budget must be positive (dim = {dim}, budget = {budget})")));
    }
    let points = set.points();
    let values = points.iter().map(|&x| f.try_eval(x)).collect::<Result<Vec<_>>>()?;
    let mut result = SeminormLowerBound {
        value: 0.0,
        witness: None,
        norm_kind,
        budget_used: 0,
        restart: None,
        scalar_floor: 0.0,
        seed,
        budget,
    };
    if points.len() < 2 {
        return Ok(result);
    }

    // scalar probe
    let mut best_pair = (0, 1);
    let mut best = f64::NEG_INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let q = (values[j] - values[i]).abs() / (points[j] - points[i]);
            if q > best {
                best = q;
                best_pair = (i, j);
            }
        }
    }
    result.scalar_floor = best;
    let (x, y) = (points[best_pair.0], points[best_pair.1]);
    let a = vec![x; dim];
    let mut b = a.clone();
    b[0] = y;
    let identity = DMatrix::<C64>::identity(dim, dim);
    let scalar = Candidate { ratio: objective(f, norm_kind, &a, &b, &identity)?, a, b, q: identity };

    if dim == 1 {
        let w = RatioWitness::from_spectra(f, &scalar.a, &scalar.b, &scalar.q)?;
        result.value = w.ratio(norm_kind);
        result.witness = Some(w);
        return Ok(result);
    }

    let starts = if (points.len() as f64).powi(2 * dim as i32) <= SWEEP_LIMIT {
        sweep(f, points, dim, norm_kind, seed)?
    } else {
        Vec::new()
    };
    let restarts = (0..budget)
        .into_par_iter()
        .map(|r| restart(f, points, dim, norm_kind, seed, r, starts.get(r)))
        .collect::<Result<Vec<_>>>()?;

    let mut incumbent = scalar;
    let mut origin = None;
    for (r, c) in restarts.into_iter().enumerate() {
        if c.ratio > incumbent.ratio {
            incumbent = c;
            origin = Some(r);
        }
    }
    let w = RatioWitness::from_spectra(f, &incumbent.a, &incumbent.b, &incumbent.q)?;
    result.value = w.ratio(norm_kind);
    result.witness = Some(w);
    result.restart = origin;
    result.budget_used = budget;
    Ok(result)
}

/// Consistency report for an operator-norm bound `m_op` and a trace-norm
/// bound `m_s1` of the same function on the same set. The true seminorms
/// satisfy `m_op / 2 <= m_s1 <= 2 m_op`; both inputs are lower bounds, so a
/// violation is only flagged when it exceeds `gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormComparison {
    pub m_op: f64,
    pub m_s1: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub warning: bool,
}

pub fn norm_comparison(m_op: f64, m_s1: f64, gap: f64) -> NormComparison {
    let lower_ok = 0.5 * m_op <= m_s1;
    let upper_ok = m_s1 <= 2.0 * m_op;
    let warning = 0.5 * m_op > m_s1 * (1.0 + gap) || m_s1 > 2.0 * m_op * (1.0 + gap);
    NormComparison { m_op, m_s1, lower_ok, upper_ok, warning }
}
