//! Scalar sequences for commuting pairs.
//!
//! Commuting self-adjoint operators diagonalize in a common basis, so a
//! pair reduces to eigenvalue sequences `(t_k, s_k)` with multiplicities
//! `n_k`. This module searches for sequences with difference quotients
//! above `2^k`, chooses `n_k = floor(1 / |f(t_k) - f(s_k)|) + 1`, and checks
//! that the weighted perturbations stay summable while the weighted
//! increments do not.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::construct::DirectSumPair;
use crate::error::{Error, Result};
use crate::funlib::{FunctionRef, ScalarFunction};
use crate::loewner::equispaced;
use crate::multiplicity::Multiplicity;
use crate::opcalc::RatioWitness;

/// Seeded random pairs tried per level on top of the grid and the dyadic backbone.
pub const RANDOM_PAIRS: usize = 4096;

/// Grid sizes above this only probe adjacent pairs.
const ALL_PAIRS_LIMIT: usize = 2000;

/// Depth of the dyadic backbone `+-2^-k 2^-j` around the origin.
const BACKBONE_DEPTH: i32 = 52;

fn level_radius(k: usize) -> f64 {
    2f64.powi(-(k as i32))
}

/// Finite prefix `(t_k, s_k, n_k)`, `k = 1..=K`, stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWitness {
    pub function: FunctionRef,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// `|f(t_k) - f(s_k)|`, evaluated once at construction.
    pub increments: Vec<f64>,
    /// Empty until [`multiplicity_sequence`] or [`SequenceWitness::with_multiplicities`].
    pub n: Vec<Multiplicity>,
    /// Decay constant `c` in `|t_k|, |s_k| <= c 2^-k`.
    pub decay: f64,
}

/// Witness file layout.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceWitnessJson {
    pub function: String,
    pub params: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub n: Vec<String>,
}

impl SequenceWitness {
    /// Checks decay, separation and quotient conditions level by level.
    pub fn new(f: &ScalarFunction, t: Vec<f64>, s: Vec<f64>, decay: f64) -> Result<Self> {
        if t.len() != s.len() {
            return Err(Error::DimensionMismatch { left: t.len(), right: s.len() });
        }
        if !(decay > 0.0) || !decay.is_finite() {
            return Err(Error::InvalidArgument(format!("decay constant must be positive, got {decay}")));
        }
        let mut increments = Vec::with_capacity(t.len());
        for (i, (&tk, &sk)) in t.iter().zip(&s).enumerate() {
            let k = i + 1;
            let r = level_radius(k);
            let violation = |reason: String| Err(Error::InvariantViolation { k, reason });
            if !(tk.abs() <= decay * r && sk.abs() <= decay * r) {
                return violation(format!("|t|, |s| exceed {decay} * 2^-{k}"));
            }
            let gap = (tk - sk).abs();
            if !(gap > 0.0 && gap < r) {
                return violation(format!("|t - s| = {gap} not in (0, 2^-{k})"));
            }
            let inc = (f.try_eval(tk)? - f.try_eval(sk)?).abs();
            if !(inc / gap > 2f64.powi(k as i32)) {
                return violation(format!("quotient {} does not exceed 2^{k}", inc / gap));
            }
            increments.push(inc);
        }
        Ok(SequenceWitness { function: f.reference(), t, s, increments, n: Vec::new(), decay })
    }

    /// Installs caller-chosen multiplicities.
    pub fn with_multiplicities(mut self, n: Vec<Multiplicity>) -> Result<Self> {
        if n.len() != self.t.len() {
            return Err(Error::DimensionMismatch { left: self.t.len(), right: n.len() });
        }
        self.n = n;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_json(&self) -> SequenceWitnessJson {
        SequenceWitnessJson {
            function: self.function.id.clone(),
            params: self.function.params.clone(),
            k: self.len(),
            t: self.t.clone(),
            s: self.s.clone(),
            n: self.n.iter().map(|m| m.to_string()).collect(),
        }
    }
}

/// Best pair found at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelResult {
    pub k: usize,
    pub t: f64,
    pub s: f64,
    pub quotient: f64,
    pub found: bool,
}

/// Per-level search results and, when every level succeeded, the witness.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSearch {
    pub levels: Vec<LevelResult>,
    pub witness: Option<SequenceWitness>,
}

impl WitnessSearch {
    /// First level without a qualifying pair.
    pub fn first_missing(&self) -> Option<usize> {
        self.levels.iter().find(|l| !l.found).map(|l| l.k)
    }
}

struct Best {
    t: f64,
    s: f64,
    q: f64,
}

impl Best {
    fn offer(&mut self, f: &ScalarFunction, r: f64, t: f64, s: f64) {
        let gap = (t - s).abs();
        if !(gap > 0.0 && gap < r) || t.abs() > r || s.abs() > r {
            return;
        }
        let q = (f.eval(t) - f.eval(s)).abs() / gap;
        if q > self.q {
            *self = Best { t, s, q };
        }
    }
}

fn search_level(f: &ScalarFunction, k: usize, grid: usize, seed: u64) -> LevelResult {
    let r = level_radius(k);
    let mut best = Best { t: 0.0, s: 0.0, q: f64::NEG_INFINITY };

    let pts = equispaced(-r, r, grid.max(2));
    if pts.len() <= ALL_PAIRS_LIMIT {
        for (i, &x) in pts.iter().enumerate() {
            for &y in &pts[..i] {
                best.offer(f, r, x, y);
            }
        }
    } else {
        for w in pts.windows(2) {
            best.offer(f, r, w[1], w[0]);
        }
    }

    let mut backbone = vec![0.0];
    for j in 0..=BACKBONE_DEPTH {
        let x = r * 2f64.powi(-j);
        backbone.push(x);
        backbone.push(-x);
    }
    for (i, &x) in backbone.iter().enumerate() {
        for &y in &backbone[..i] {
            best.offer(f, r, x, y);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    for _ in 0..RANDOM_PAIRS {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let center = sign * r * 2f64.powf(-20.0 * rng.random::<f64>());
        let step = r * 10f64.powf(-12.0 * rng.random::<f64>());
        let other = if rng.random::<bool>() { center + step } else { center - step };
        best.offer(f, r, center, other.clamp(-r, r));
    }

    let found = best.q > 2f64.powi(k as i32);
    LevelResult { k, t: best.t, s: best.s, quotient: best.q.max(0.0), found }
}

/// Searches each level `k = 1..=K` for `(t, s)` with `|t - s| < 2^-k`,
/// `|t|, |s| <= 2^-k` and difference quotient above `2^k`. Levels run in
/// parallel with one random stream each.
pub fn scalar_ratio_witnesses(f: &ScalarFunction, k: usize, search_grid: usize, seed: u64) -> Result<WitnessSearch> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let levels: Vec<LevelResult> = (1..=k).into_par_iter().map(|lvl| search_level(f, lvl, search_grid, seed)).collect();
    let witness = if levels.iter().all(|l| l.found) {
        let t = levels.iter().map(|l| l.t).collect();
        let s = levels.iter().map(|l| l.s).collect();
        Some(SequenceWitness::new(f, t, s, 1.0)?)
    } else {
        None
    };
    Ok(WitnessSearch { levels, witness })
}

/// Fills `n_k = floor(1 / |f(t_k) - f(s_k)|) + 1`.
pub fn multiplicity_sequence(f: &ScalarFunction, w: &SequenceWitness) -> Result<SequenceWitness> {
    let mut n = Vec::with_capacity(w.len());
    for (i, (&t, &s)) in w.t.iter().zip(&w.s).enumerate() {
        let inc = (f.try_eval(t)? - f.try_eval(s)?).abs();
        if inc == 0.0 {
            return Err(Error::DegenerateIncrement { k: i + 1 });
        }
        n.push(Multiplicity::new(Multiplicity::floor_reciprocal(inc)? + BigUint::from(1u32))?);
    }
    w.clone().with_multiplicities(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub k: usize,
    pub t: f64,
    pub s: f64,
    pub n: Multiplicity,
    /// `n_k |t_k - s_k|`
    pub weighted_perturbation: f64,
    /// `n_k |f(t_k) - f(s_k)|`
    pub weighted_increment: f64,
    /// `2^(1-k)`
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    pub perturbation_sum: f64,
    /// `sum 2^(1-k)`, below 2.
    pub perturbation_majorant: f64,
    pub increment_sum: f64,
    /// `K`: each weighted increment is at least 1.
    pub increment_floor: f64,
}

impl DivergenceReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
            && self.perturbation_sum < self.perturbation_majorant.max(f64::MIN_POSITIVE)
            && self.increment_sum >= self.increment_floor
            || self.rows.is_empty()
    }
}

/// Checks `n_k |t_k - s_k| < 2^(1-k)` and `n_k |f(t_k) - f(s_k)| >= 1` for
/// `k <= K` and accumulates both weighted sums.
pub fn divergence_check(w: &SequenceWitness, k: usize) -> Result<DivergenceReport> {
    if k > w.len() {
        return Err(Error::IndexError { index: k, len: w.len() });
    }
    if w.n.len() < k {
        return Err(Error::InvariantViolation { k: w.n.len() + 1, reason: "multiplicity missing".into() });
    }
    let mut rows = Vec::with_capacity(k);
    let (mut p_sum, mut i_sum, mut majorant) = (0.0, 0.0, 0.0);
    for i in 0..k {
        let lvl = i + 1;
        let n = &w.n[i];
        let wp = n.times((w.t[i] - w.s[i]).abs());
        let wi = n.times(w.increments[i]);
        let bound = 2f64.powi(1 - lvl as i32);
        let ok = wp < bound && wi >= 1.0;
        if !ok {
            return Err(Error::InvariantViolation {
                k: lvl,
                reason: format!("weighted perturbation {wp} vs bound {bound}, weighted increment {wi}"),
            });
        }
        p_sum += wp;
        i_sum += wi;
        majorant += bound;
        rows.push(DivergenceRow { k: lvl, t: w.t[i], s: w.s[i], n: n.clone(), weighted_perturbation: wp, weighted_increment: wi, bound, ok });
    }
    Ok(DivergenceReport { rows, perturbation_sum: p_sum, perturbation_majorant: majorant, increment_sum: i_sum, increment_floor: k as f64 })
}

/// 1x1 blocks `(t_k)`, `(s_k)` with multiplicity `n_k`.
pub fn diagonal_embedding(f: &ScalarFunction, w: &SequenceWitness, k: usize) -> Result<DirectSumPair> {
    if k > w.len() {
        return Err(Error::IndexError { index: k, len: w.len() });
    }
    if w.n.len() < k {
        return Err(Error::InvariantViolation { k: w.n.len() + 1, reason: "multiplicity missing".into() });
    }
    let mut pair = DirectSumPair::new();
    for i in 0..k {
        pair.push_witness(RatioWitness::scalar(f, w.t[i], w.s[i])?, w.n[i].clone());
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funlib::get_function;

    fn f(id: &str) -> ScalarFunction {
        get_function(id, &[]).unwrap()
    }

    fn fives(k: usize) -> (Vec<f64>, Vec<f64>) {
        ((1..=k).map(|i| 5f64.powi(-(i as i32))).collect(), vec![0.0; k])
    }

    #[test]
    fn sqrt_witness_invariants() {
        let (t, s) = fives(30);
        let w = SequenceWitness::new(&f("sqrt_abs"), t, s, 1.0).unwrap();
        assert_eq!(w.len(), 30);
        let (t, s) = fives(3);
        let err = SequenceWitness::new(&f("identity"), t, s, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { k: 1, .. }));
        let err = SequenceWitness::new(&f("sqrt_abs"), vec![0.6], vec![0.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { k: 1, .. }));
    }

    #[test]
    fn multiplicity_examples() {
        // 1x1 steps with the requested increments
        for (inc, n) in [(0.3, 4u64), (1.0, 2), (0.5, 3)] {
            let jump = ScalarFunction::custom("jump", move |x| if x > 0.0 { inc } else { 0.0 });
            let w = SequenceWitness::new(&jump, vec![0.01], vec![0.0], 1.0).unwrap();
            let w = multiplicity_sequence(&jump, &w).unwrap();
            assert_eq!(w.n, vec![Multiplicity::from_u64(n).unwrap()]);
        }
    }

    #[test]
    fn degenerate_increment() {
        let (t, s) = fives(2);
        let w = SequenceWitness::new(&f("sqrt_abs"), t, s, 1.0).unwrap();
        let err = multiplicity_sequence(&f("constant"), &w).unwrap_err();
        assert!(matches!(err, Error::DegenerateIncrement { k: 1 }));
    }

    #[test]
    fn sqrt_search_finds_all_levels() {
        let g = f("sqrt_abs");
        let res = scalar_ratio_witnesses(&g, 20, 257, 3).unwrap();
        assert_eq!(res.first_missing(), None);
        let w = multiplicity_sequence(&g, res.witness.as_ref().unwrap()).unwrap();
        let rep = divergence_check(&w, 20).unwrap();
        assert!(rep.passes());
        assert!(rep.perturbation_sum < 2.0 && rep.increment_sum >= 20.0);
    }

    #[test]
    fn identity_and_smooth_functions_not_found() {
        let res = scalar_ratio_witnesses(&f("identity"), 6, 257, 1).unwrap();
        assert!(res.witness.is_none());
        assert!(res.levels.iter().all(|l| !l.found && l.quotient == 1.0));
        let res = scalar_ratio_witnesses(&f("x2sin_inv"), 6, 513, 1).unwrap();
        assert!(res.levels.iter().all(|l| !l.found && l.quotient < 2.0));
    }

    #[test]
    fn oscillating_quotients_grow() {
        // x sin(1/x) has |f'| ~ 1/|x| near 0, so every level has a witness
        let res = scalar_ratio_witnesses(&f("xsin_inv"), 6, 257, 1).unwrap();
        assert_eq!(res.first_missing(), None);
    }

    #[test]
    fn unit_increments_sum_to_k() {
        let half = ScalarFunction::custom("half_step", |x| if x == 0.0 { 0.0 } else { 0.5 });
        let k = 12;
        let t: Vec<f64> = (1..=k).map(|i| 8f64.powi(-i)).collect();
        let w = SequenceWitness::new(&half, t, vec![0.0; k as usize], 1.0).unwrap();
        let w = w.with_multiplicities(vec![Multiplicity::from_u64(2).unwrap(); k as usize]).unwrap();
        let rep = divergence_check(&w, k as usize).unwrap();
        assert_eq!(rep.increment_sum, k as f64);
    }

    #[test]
    fn empty_check_and_bad_indices() {
        let (t, s) = fives(3);
        let g = f("sqrt_abs");
        let w = SequenceWitness::new(&g, t, s, 1.0).unwrap();
        assert!(matches!(divergence_check(&w, 1), Err(Error::InvariantViolation { k: 1, .. })));
        let w = multiplicity_sequence(&g, &w).unwrap();
        let rep = divergence_check(&w, 0).unwrap();
        assert_eq!((rep.perturbation_sum, rep.increment_sum), (0.0, 0.0));
        assert!(matches!(divergence_check(&w, 4), Err(Error::IndexError { .. })));
    }

    #[test]
    fn embedding_examples() {
        let jump = ScalarFunction::custom("jump", |x| if x > 0.0 { 0.5 } else { 0.0 });
        let w = SequenceWitness::new(&jump, vec![0.2], vec![0.0], 1.0).unwrap();
        let w = w.with_multiplicities(vec![Multiplicity::from_u64(3).unwrap()]).unwrap();
        let pair = diagonal_embedding(&jump, &w, 1).unwrap();
        assert_eq!(pair.len(), 1);
        assert!((pair.partial_sums(1).unwrap().0 - 0.6).abs() < 1e-15);

        let g = f("sqrt_abs");
        let (t, s) = fives(30);
        let w = multiplicity_sequence(&g, &SequenceWitness::new(&g, t, s, 1.0).unwrap()).unwrap();
        let rep = divergence_check(&w, 30).unwrap();
        let (p, i) = diagonal_embedding(&g, &w, 30).unwrap().partial_sums(30).unwrap();
        assert_eq!((p, i), (rep.perturbation_sum, rep.increment_sum));
    }

    #[test]
    fn json_layout() {
        let g = f("sqrt_abs");
        let (t, s) = fives(2);
        let w = multiplicity_sequence(&g, &SequenceWitness::new(&g, t, s, 1.0).unwrap()).unwrap();
        let v = serde_json::to_value(w.to_json()).unwrap();
        assert_eq!(v["function"], "sqrt_abs");
        assert_eq!(v["K"], 2);
        assert_eq!(v["n"][0], "3");
    }
}
