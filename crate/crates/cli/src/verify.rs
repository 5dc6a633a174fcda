use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specshift::loewner::perturbation_identity_residual;
use specshift::opcalc::{apply_function, decompose, increment_ratio, schatten_norm, spectral_truncation, trace_transfer_check, SchattenP, C64};
use specshift::sampling::{random_hermitian, random_unitary};
use specshift::{get_function, HermitianOperator, ScalarFunction};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::report::{Cell, Report};

pub const DEFAULT_SAMPLES: usize = 20;

const CUBIC: [f64; 4] = [1.0, -2.0, 0.0, 3.0];

fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn matrix_poly(a: &DMatrix<C64>, coeffs: &[f64]) -> DMatrix<C64> {
    let n = a.nrows();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * a + DMatrix::<C64>::identity(n, n) * C64::new(c, 0.0);
    }
    acc
}

fn op_norm(a: &HermitianOperator) -> specshift::Result<f64> {
    schatten_norm(a.matrix(), SchattenP::Inf)
}

struct Checks {
    report: Report,
    samples: usize,
}

impl Checks {
    fn row(&mut self, check: &str, function: &str, residual: f64, tolerance: f64) {
        let pass = residual <= tolerance;
        self.report.ok &= pass;
        self.report.push(vec![
            Cell::Str(check.into()),
            Cell::Str(function.into()),
            Cell::Int(self.samples as u64),
            Cell::Float(residual),
            Cell::Float(tolerance),
            Cell::Bool(pass),
        ]);
    }
}

/// Random `(A, B)` pairs cycling through `dims`, real and complex alternately.
fn pairs(seed: u64, stream: u64, samples: usize, dims: &[usize]) -> Vec<(HermitianOperator, HermitianOperator)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..samples)
        .map(|i| {
            let n = dims[i % dims.len()];
            (random_hermitian(&mut rng, n, i % 2 == 1), random_hermitian(&mut rng, n, i % 3 == 2))
        })
        .collect()
}

fn max_over<T, G>(items: &[T], mut g: G) -> specshift::Result<f64>
where
    G: FnMut(&T) -> specshift::Result<f64>,
{
    items.iter().try_fold(0.0f64, |m, x| Ok(m.max(g(x)?)))
}

/// Regression suite over seeded random matrices plus any configured
/// fixtures. Every row carries the measured residual and its tolerance.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let exp = Experiment::Verify;
    cfg.validate(exp)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let dims: Vec<usize> = cfg.dims.clone().unwrap_or_else(|| (2..=8).collect());
    let seed = cfg.seed;
    let mut c = Checks { report: Report::new(&["check", "function", "samples", "residual", "tolerance", "pass"]), samples };

    let ps = pairs(seed, 1, samples, &dims);

    let decomp = max_over(&ps, |(a, _)| {
        let d = decompose(a)?;
        let u = &d.eigenvectors;
        let n = a.dim();
        let ortho = max_entry(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)));
        let back = d.synthesize(d.eigenvalues.as_slice())?;
        Ok(ortho.max(max_entry(&(back.matrix() - a.matrix())) / a.max_abs().max(1.0)))
    })?;
    c.row("decomposition", "", decomp, 1e-10);

    for (name, coeffs, degree) in [("x^2", &[0.0, 0.0, 1.0][..], 2), ("x^3", &[0.0, 0.0, 0.0, 1.0][..], 3), ("poly(1,-2,0,3)", &CUBIC[..], 3)] {
        let f = get_function("poly", coeffs)?;
        let r = max_over(&ps, |(a, _)| {
            let via = apply_function(&f, a)?;
            Ok(max_entry(&(via.matrix() - matrix_poly(a.matrix(), coeffs))) / (1.0 + op_norm(a)?).powi(degree))
        })?;
        c.row("polynomial_calculus", name, r, 1e-9);
    }

    let identity_cases: [(&str, ScalarFunction, i32, f64); 4] = [
        ("x^2", get_function("poly", &[0.0, 0.0, 1.0])?, 2, 1e-9),
        ("poly(1,-2,0,3)", get_function("poly", &CUBIC)?, 3, 1e-9),
        ("sin", get_function("sin", &[])?, 1, 1e-8),
        ("exp", get_function("exp", &[])?, 1, 1e-8),
    ];
    for (name, f, power, tol) in &identity_cases {
        let r = max_over(&ps, |(a, b)| {
            let scale = 1f64.max(op_norm(a)?).max(op_norm(b)?);
            Ok(perturbation_identity_residual(f, a, b)? / scale.powi(*power))
        })?;
        c.row("perturbation_identity", name, r, *tol);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let kinds = [SchattenP::One, SchattenP::Two, SchattenP::Inf];
    let (mut ordering, mut invariance, mut triangle) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in &ps {
        let x = a.difference(b)?;
        let n = a.dim();
        let [s1, s2, si] = kinds.map(|p| schatten_norm(&x, p));
        let (s1, s2, si) = (s1?, s2?, si?);
        ordering = ordering.max(((si - s2).max(s2 - s1).max(s1 - n as f64 * si)).max(0.0) / s1.max(f64::MIN_POSITIVE));
        let q = random_unitary(&mut rng, n);
        let y = a.matrix() + b.matrix();
        for p in kinds {
            let base = schatten_norm(&x, p)?;
            let rotated = schatten_norm(&(&q * &x * q.adjoint()), p)?;
            invariance = invariance.max((rotated - base).abs() / base.max(f64::MIN_POSITIVE));
            let (nx, ny, nxy) = (base, schatten_norm(&y, p)?, schatten_norm(&(&x + &y), p)?);
            triangle = triangle.max((nxy - nx - ny).max(0.0) / (nx + ny).max(f64::MIN_POSITIVE));
        }
    }
    c.row("norm_ordering", "", ordering, 1e-12);
    c.row("unitary_invariance", "", invariance, 1e-9);
    c.row("triangle_inequality", "", triangle, 1e-10);

    let mut mismatches = 0.0;
    for (a, _) in &ps {
        let delta = rng.random_range(0.1..1.5);
        let (t, r) = spectral_truncation(a, delta)?;
        let rest = decompose(&HermitianOperator::new(a.matrix() - t.matrix())?)?;
        let rank = rest.eigenvalues.iter().filter(|x| x.abs() > 1e-10).count();
        if rank != r {
            mismatches += 1.0;
        }
    }
    c.row("truncation_rank", "", mismatches, 0.0);

    let tt_f = match &cfg.function {
        Some(r) => r.resolve()?,
        None => get_function("abs", &[])?,
    };
    let tt = max_over(&ps, |(a, b)| {
        let delta = 0.5;
        let rep = trace_transfer_check(&tt_f, delta, a, b)?;
        Ok(rep.reassembly_residual / rep.scale)
    })?;
    c.row("trace_transfer", tt_f.id(), tt, 1e-9);

    let id = get_function("identity", &[])?;
    let ratio = max_over(&ps, |(a, b)| Ok((increment_ratio(&id, a, b)?.ratio_s1 - 1.0).abs()))?;
    c.row("identity_ratio", "identity", ratio, 1e-12);

    let fixture_f = match &cfg.function {
        Some(r) => r.resolve()?,
        None => get_function("sin", &[])?,
    };
    for fx in &cfg.fixtures {
        let a = HermitianOperator::from_exchange(&fx.a)?;
        let b = HermitianOperator::from_exchange(&fx.b)?;
        let scale = 1f64.max(op_norm(&a)?).max(op_norm(&b)?);
        let r = perturbation_identity_residual(&fixture_f, &a, &b)? / scale;
        c.row(&format!("fixture:{}", fx.name), fixture_f.id(), r, 1e-8);
    }
    Ok(c.report)
}
