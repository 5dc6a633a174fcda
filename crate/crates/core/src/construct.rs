//! Segment refinement, direct-sum amplification and divergent block families.
//!
//! A direct sum `A_1 (+) A_2 (+) ...` is never materialized. Blocks are kept
//! as `(A_i, B_i, N_i)` and every trace-norm aggregate is `sum N_i * (block
//! quantity)`, which is exact for block-diagonal operators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funlib::{FunctionRef, ScalarFunction};
use crate::loewner::{restrict_to_grid, seminorm_lower_bound, FiniteSpectrumSet};
use crate::multiplicity::Multiplicity;
use crate::opcalc::{apply_function, decompose, increment_ratio, HermitianOperator, MatrixJson, NormKind, RatioWitness};
use crate::opcalc::hermitian_schatten;
use crate::opcalc::SchattenP;

/// Largest subdivision tried by [`segment_refine`].
pub const MAX_SEGMENTS: u64 = 1 << 20;

/// One block `(A, B)` repeated `multiplicity` times.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSumBlock {
    pub witness: RatioWitness,
    pub multiplicity: Multiplicity,
}

impl DirectSumBlock {
    pub fn perturbation_s1(&self) -> f64 {
        self.multiplicity.times(self.witness.perturbation_s1)
    }

    pub fn increment_s1(&self) -> f64 {
        self.multiplicity.times(self.witness.increment_s1)
    }

    pub fn ratio_s1(&self) -> f64 {
        self.increment_s1() / self.perturbation_s1()
    }
}

/// Blocks of a direct sum pair with symbolic multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectSumPair {
    blocks: Vec<DirectSumBlock>,
}

impl DirectSumPair {
    pub fn new() -> Self {
        DirectSumPair::default()
    }

    /// Appends `(A, B)` with multiplicity `n`; rejects `A = B`.
    pub fn push(&mut self, f: &ScalarFunction, a: &HermitianOperator, b: &HermitianOperator, n: Multiplicity) -> Result<()> {
        let witness = increment_ratio(f, a, b)?;
        self.blocks.push(DirectSumBlock { witness, multiplicity: n });
        Ok(())
    }

    pub fn push_witness(&mut self, witness: RatioWitness, n: Multiplicity) {
        self.blocks.push(DirectSumBlock { witness, multiplicity: n });
    }

    pub fn blocks(&self) -> &[DirectSumBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `(sum N_i ||B_i - A_i||_1, sum N_i ||f(B_i) - f(A_i)||_1)` over the
    /// first `upto` blocks.
    pub fn partial_sums(&self, upto: usize) -> Result<(f64, f64)> {
        if upto > self.blocks.len() {
            return Err(Error::IndexError { index: upto, len: self.blocks.len() });
        }
        Ok(self.blocks[..upto]
            .iter()
            .fold((0.0, 0.0), |(p, i), b| (p + b.perturbation_s1(), i + b.increment_s1())))
    }

    pub fn aggregate_ratio(&self) -> f64 {
        let (p, i) = self.partial_sums(self.blocks.len()).expect("in range");
        i / p
    }
}

/// Output of [`segment_refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub a: HermitianOperator,
    pub b: HermitianOperator,
    /// Number of segments the path was cut into (1 when unchanged).
    pub segments: u64,
    /// Index of the chosen segment.
    pub index: u64,
    pub witness: RatioWitness,
    pub input_ratio_s1: f64,
}

/// Cuts the path `t -> A + t (B - A)` into `n = 2, 4, 8, ...` pieces until
/// every piece has trace-norm increment below 1, then returns the piece
/// with the largest increment (smallest index on ties). Pairs whose
/// increment is already below 1 are returned unchanged.
pub fn segment_refine(f: &ScalarFunction, a: &HermitianOperator, b: &HermitianOperator) -> Result<Refinement> {
    let input = increment_ratio(f, a, b)?;
    if input.increment_s1 < 1.0 {
        return Ok(Refinement {
            a: a.clone(),
            b: b.clone(),
            segments: 1,
            index: 0,
            input_ratio_s1: input.ratio_s1,
            witness: input,
        });
    }
    // values[k] = f(A + (k/n)(B - A)); the grid for 2n reuses the even points
    let mut values = vec![apply_function(f, a)?, apply_function(f, b)?];
    let mut n: u64 = 1;
    while n < MAX_SEGMENTS {
        n *= 2;
        let mut next = Vec::with_capacity(values.len() * 2 - 1);
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                let t = (2 * k - 1) as f64 / n as f64;
                next.push(apply_function(f, &a.toward(b, t)?)?);
            }
            next.push(v.clone());
        }
        values = next;

        let mut best = (0usize, f64::NEG_INFINITY);
        let mut all_below = true;
        for k in 0..values.len() - 1 {
            let inc = hermitian_schatten(&values[k + 1].difference(&values[k])?, SchattenP::One)?;
            if inc >= 1.0 {
                all_below = false;
                break;
            }
            if inc > best.1 {
                best = (k, inc);
            }
        }
        if all_below {
            let k = best.0;
            let a_k = a.toward(b, k as f64 / n as f64)?;
            let b_k = a.toward(b, (k + 1) as f64 / n as f64)?;
            let witness = increment_ratio(f, &a_k, &b_k)?;
            return Ok(Refinement { a: a_k, b: b_k, segments: n, index: k as u64, witness, input_ratio_s1: input.ratio_s1 });
        }
    }
    Err(Error::RefinementOverflow { n_max: MAX_SEGMENTS })
}

/// `floor(1 / increment)` for an increment in `(0, 1)`.
pub fn unit_multiplicity(increment: f64) -> Result<Multiplicity> {
    if !(increment > 0.0 && increment < 1.0) {
        return Err(Error::PreconditionViolated(format!("increment {increment} is not in (0, 1)")));
    }
    Multiplicity::new(Multiplicity::floor_reciprocal(increment)?)
}

/// Repeats a witness `N = floor(1 / ||f(B) - f(A)||_1)` times so the
/// aggregate increment lands in `[1/2, 1]`.
pub fn amplify_witness(witness: RatioWitness) -> Result<DirectSumPair> {
    let n = unit_multiplicity(witness.increment_s1)?;
    let mut pair = DirectSumPair::new();
    pair.push_witness(witness, n);
    Ok(pair)
}

pub fn amplify_to_unit(f: &ScalarFunction, a: &HermitianOperator, b: &HermitianOperator) -> Result<DirectSumPair> {
    amplify_witness(increment_ratio(f, a, b)?)
}

/// Knobs for [`build_divergent_family_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOptions {
    /// Matrix size of the searched blocks.
    pub block_dim: usize,
    /// Initial grid size on `[-delta/2, delta/2]`.
    pub grid_points: usize,
    /// Nested grid refinements (`n -> 2n - 1`) tried before giving up.
    /// Refinement also stops early when the ratio grows too slowly to reach
    /// the target within the remaining levels.
    pub max_refinements: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions { block_dim: 2, grid_points: 65, max_refinements: 8 }
    }
}

/// `delta_n = 2^-n * delta0` for `n = 1..=k`.
pub fn default_schedule(delta0: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|n| delta0 * 2f64.powi(-(n as i32))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyBlock {
    pub n: usize,
    pub delta: f64,
    pub target_ratio: f64,
    /// Aggregate ratio, equal to the block ratio.
    pub achieved_ratio: f64,
    pub multiplicity: Multiplicity,
    /// Aggregate increment `N ||f(B) - f(A)||_1`.
    pub increment_s1: f64,
    /// Aggregate perturbation `N ||B - A||_1`.
    pub perturbation_s1: f64,
    pub witness: RatioWitness,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFailure {
    pub n: usize,
    pub delta: f64,
    pub target_ratio: f64,
    /// Best trace-norm ratio found before giving up.
    pub best_ratio: f64,
    pub reason: String,
    pub witness: Option<RatioWitness>,
}

/// Blocks `n = 1, 2, ...` with ratio above `2^n`, truncated at the first
/// block that could not be built.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergentFamily {
    pub function: FunctionRef,
    pub blocks: Vec<FamilyBlock>,
    pub failure: Option<FamilyFailure>,
}

/// Family file layout, one entry per block.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyBlockJson {
    pub n: usize,
    pub delta: f64,
    pub target_ratio: f64,
    pub achieved_ratio: f64,
    pub multiplicity: String,
    pub increment_s1: f64,
    #[serde(rename = "A")]
    pub a: Option<MatrixJson>,
    #[serde(rename = "B")]
    pub b: Option<MatrixJson>,
    pub status: &'static str,
}

impl DivergentFamily {
    pub fn as_direct_sum(&self) -> DirectSumPair {
        let mut pair = DirectSumPair::new();
        for b in &self.blocks {
            pair.push_witness(b.witness.clone(), b.multiplicity.clone());
        }
        pair
    }

    pub fn to_json(&self) -> Vec<FamilyBlockJson> {
        let mut out: Vec<FamilyBlockJson> = self
            .blocks
            .iter()
            .map(|b| FamilyBlockJson {
                n: b.n,
                delta: b.delta,
                target_ratio: b.target_ratio,
                achieved_ratio: b.achieved_ratio,
                multiplicity: b.multiplicity.to_string(),
                increment_s1: b.increment_s1,
                a: Some(b.witness.a.to_exchange()),
                b: Some(b.witness.b.to_exchange()),
                status: "ok",
            })
            .collect();
        if let Some(f) = &self.failure {
            out.push(FamilyBlockJson {
                n: f.n,
                delta: f.delta,
                target_ratio: f.target_ratio,
                achieved_ratio: f.best_ratio,
                multiplicity: "0".into(),
                increment_s1: f.witness.as_ref().map_or(0.0, |w| w.increment_s1),
                a: f.witness.as_ref().map(|w| w.a.to_exchange()),
                b: f.witness.as_ref().map(|w| w.b.to_exchange()),
                status: "failed",
            });
        }
        out
    }
}

/// `(sum N_n ||B_n - A_n||_1, sum N_n ||f(B_n) - f(A_n)||_1)` over the first
/// `upto` successful blocks.
pub fn partial_sums(family: &DivergentFamily, upto: usize) -> Result<(f64, f64)> {
    if upto > family.blocks.len() {
        return Err(Error::IndexError { index: upto, len: family.blocks.len() });
    }
    Ok(family.blocks[..upto]
        .iter()
        .fold((0.0, 0.0), |(p, i), b| (p + b.perturbation_s1, i + b.increment_s1)))
}

fn block_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn spectral_radius(a: &HermitianOperator) -> Result<f64> {
    Ok(decompose(a)?.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

enum BlockOutcome {
    Built(FamilyBlock),
    Failed(FamilyFailure),
}

fn build_block(
    f: &ScalarFunction,
    n: usize,
    delta: f64,
    budget: usize,
    seed: u64,
    opts: &FamilyOptions,
) -> Result<BlockOutcome> {
    let target = 2f64.powi(n as i32);
    let fail = |best: f64, reason: String, witness: Option<RatioWitness>| {
        Ok(BlockOutcome::Failed(FamilyFailure { n, delta, target_ratio: target, best_ratio: best, reason, witness }))
    };
    let mut grid: FiniteSpectrumSet = restrict_to_grid(-delta / 2.0, delta / 2.0, opts.grid_points)?;
    let mut best: Option<RatioWitness> = None;
    let mut found = None;
    let mut previous = 0.0;
    for level in 0..=opts.max_refinements {
        let lb = seminorm_lower_bound(f, &grid, opts.block_dim, NormKind::Schatten1, budget, block_seed(seed, n))?;
        let value = lb.witness.as_ref().map_or(0.0, |w| w.ratio_s1);
        if let Some(w) = lb.witness {
            if best.as_ref().is_none_or(|b| w.ratio_s1 > b.ratio_s1) {
                best = Some(w.clone());
            }
            if w.ratio_s1 > target {
                found = Some((w, grid.len()));
                break;
            }
        }
        // Stop once the growth per refinement, extrapolated over the
        // remaining levels, cannot reach the target.
        if level > 0 {
            let growth = if previous > 0.0 { value / previous } else { f64::INFINITY };
            let remaining = (opts.max_refinements - level) as i32;
            if !(value * growth.powi(remaining) > target) {
                break;
            }
        }
        previous = value;
        grid = grid.refined()?;
    }
    let Some((witness, grid_points)) = found else {
        let best_ratio = best.as_ref().map_or(0.0, |w| w.ratio_s1);
        return fail(best_ratio, format!("best ratio {best_ratio} does not exceed target {target}"), best);
    };

    let refined = match segment_refine(f, &witness.a, &witness.b) {
        Ok(r) => r,
        Err(Error::RefinementOverflow { .. }) => {
            return fail(witness.ratio_s1, "segment refinement overflow".into(), Some(witness));
        }
        Err(e) => return Err(e),
    };
    let amplified = amplify_witness(refined.witness)?;
    let block = &amplified.blocks()[0];
    let achieved = block.ratio_s1();
    if !(achieved > target) {
        return fail(achieved, format!("amplified ratio {achieved} does not exceed target {target}"), Some(block.witness.clone()));
    }
    let radius = spectral_radius(&block.witness.a)?.max(spectral_radius(&block.witness.b)?);
    if !(radius < delta) {
        return Err(Error::InvariantViolation { k: n, reason: format!("block spectral radius {radius} not below {delta}") });
    }
    Ok(BlockOutcome::Built(FamilyBlock {
        n,
        delta,
        target_ratio: target,
        achieved_ratio: achieved,
        multiplicity: block.multiplicity.clone(),
        increment_s1: block.increment_s1(),
        perturbation_s1: block.perturbation_s1(),
        witness: block.witness.clone(),
        grid_points,
    }))
}

/// [`build_divergent_family_with`] with [`FamilyOptions::default`].
pub fn build_divergent_family(
    f: &ScalarFunction,
    deltas: &[f64],
    k: usize,
    per_block_budget: usize,
    seed: u64,
) -> Result<DivergentFamily> {
    build_divergent_family_with(f, deltas, k, per_block_budget, seed, &FamilyOptions::default())
}

/// For each `n <= k`: search a block with spectra in `[-delta_n/2,
/// delta_n/2]` whose trace-norm ratio exceeds `2^n`, refine it to an
/// increment below 1 and amplify it to an aggregate increment in `[1/2, 1]`.
/// Stops at the first `n` for which no such block is found.
pub fn build_divergent_family_with(
    f: &ScalarFunction,
    deltas: &[f64],
    k: usize,
    per_block_budget: usize,
    seed: u64,
    opts: &FamilyOptions,
) -> Result<DivergentFamily> {
    if k == 0 || deltas.len() < k {
        return Err(Error::InvalidArgument(format!("need k >= 1 and at least k deltas (k = {k}, {} given)", deltas.len())));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("delta schedule must be positive and strictly decreasing".into()));
    }
    let mut family = DivergentFamily { function: f.reference(), blocks: Vec::new(), failure: None };
    for n in 1..=k {
        match build_block(f, n, deltas[n - 1], per_block_budget, seed, opts)? {
            BlockOutcome::Built(b) => family.blocks.push(b),
            BlockOutcome::Failed(e) => {
                family.failure = Some(e);
                break;
            }
        }
    }
    Ok(family)
}
