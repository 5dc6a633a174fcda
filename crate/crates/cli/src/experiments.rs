use serde_json::json;
use specshift::commuting::{divergence_check, multiplicity_sequence, scalar_ratio_witnesses};
use specshift::construct::{build_divergent_family_with, default_schedule, FamilyOptions};
use specshift::loewner::{norm_comparison, restrict_to_grid, seminorm_lower_bound};
use specshift::NormKind;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::report::{to_json_string, Cell, Report};

/// Default grid size for the commuting witness search.
pub const DEFAULT_SEARCH_GRID: usize = 1025;

/// Side-file name `<stem>.<suffix>` for the configured output, if any.
fn side_name(cfg: &ExperimentConfig, suffix: &str) -> Option<String> {
    let out = cfg.output.as_ref()?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    Some(format!("{stem}.{suffix}"))
}

/// One row per `(dim, norm_kind)` with the best ratio and its witness file.
pub fn run_ratio_search(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let exp = Experiment::RatioSearch;
    cfg.validate(exp)?;
    let f = cfg.resolve_function(exp)?;
    let grid = cfg.grid.as_ref().expect("validated");
    let set = restrict_to_grid(grid.interval[0], grid.interval[1], grid.count)?;
    let budget = cfg.budget.expect("validated");
    let kinds = cfg.norm_kinds.clone().unwrap_or_else(|| vec![NormKind::Operator, NormKind::Schatten1]);

    let mut report = Report::new(&["dim", "norm_kind", "budget", "seed", "best_ratio", "witness_file"]);
    for &dim in cfg.dims.as_ref().expect("validated") {
        let mut by_kind = Vec::new();
        for &kind in &kinds {
            let lb = seminorm_lower_bound(&f, &set, dim, kind, budget, cfg.seed)?;
            let file = side_name(cfg, &format!("dim{dim}.{}.json", kind.as_str()));
            if let Some(name) = &file {
                report.side_files.push((name.clone(), to_json_string(&lb.to_json(&f))));
            }
            report.push(vec![
                Cell::Int(dim as u64),
                Cell::Str(kind.as_str().into()),
                Cell::Int(budget as u64),
                Cell::Int(cfg.seed),
                Cell::Float(lb.value),
                Cell::Str(file.unwrap_or_default()),
            ]);
            by_kind.push((kind, lb.value));
        }
        let op = by_kind.iter().find(|(k, _)| *k == NormKind::Operator);
        let s1 = by_kind.iter().find(|(k, _)| *k == NormKind::Schatten1);
        if let (Some((_, m_op)), Some((_, m_s1))) = (op, s1) {
            let c = norm_comparison(*m_op, *m_s1, 0.1);
            if c.warning {
                eprintln!("warning: dim {dim}: operator bound {m_op} and trace-norm bound {m_s1} are more than a factor 2 apart");
            }
        }
    }
    Ok(report)
}

/// One row per block, with running partial sums; the failed block, if any,
/// ends the table.
pub fn run_divergence(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let exp = Experiment::Divergence;
    cfg.validate(exp)?;
    let f = cfg.resolve_function(exp)?;
    let k = cfg.k.expect("validated");
    let deltas = default_schedule(cfg.delta0.unwrap_or(1.0), k);
    let opts = FamilyOptions { block_dim: cfg.block_dim.unwrap_or(FamilyOptions::default().block_dim), ..FamilyOptions::default() };
    let family = build_divergent_family_with(&f, &deltas, k, cfg.budget.expect("validated"), cfg.seed, &opts)?;

    let mut report = Report::new(&[
        "n",
        "delta",
        "target_ratio",
        "achieved_ratio",
        "multiplicity",
        "increment_s1",
        "perturbation_partial_sum",
        "increment_partial_sum",
        "status",
    ]);
    let (mut p_sum, mut i_sum) = (0.0, 0.0);
    for b in &family.blocks {
        p_sum += b.perturbation_s1;
        i_sum += b.increment_s1;
        report.push(vec![
            Cell::Int(b.n as u64),
            Cell::Float(b.delta),
            Cell::Float(b.target_ratio),
            Cell::Float(b.achieved_ratio),
            Cell::Str(b.multiplicity.to_string()),
            Cell::Float(b.increment_s1),
            Cell::Float(p_sum),
            Cell::Float(i_sum),
            Cell::Str("ok".into()),
        ]);
    }
    if let Some(fail) = &family.failure {
        eprintln!("block {} failed: {}", fail.n, fail.reason);
        report.push(vec![
            Cell::Int(fail.n as u64),
            Cell::Float(fail.delta),
            Cell::Float(fail.target_ratio),
            Cell::Float(fail.best_ratio),
            Cell::Str(String::new()),
            Cell::Float(fail.witness.as_ref().map_or(0.0, |w| w.increment_s1)),
            Cell::Float(p_sum),
            Cell::Float(i_sum),
            Cell::Str("failed".into()),
        ]);
    }
    if let Some(name) = side_name(cfg, "family.json") {
        report.side_files.push((name, to_json_string(&family.to_json())));
    }
    Ok(report)
}

/// Per-level rows of the divergence check, or an empty table when some
/// level has no witness.
pub fn run_commuting(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let exp = Experiment::Commuting;
    cfg.validate(exp)?;
    let f = cfg.resolve_function(exp)?;
    let k = cfg.k.expect("validated");
    let search = scalar_ratio_witnesses(&f, k, cfg.search_grid.unwrap_or(DEFAULT_SEARCH_GRID), cfg.seed)?;

    let mut report =
        Report::new(&["k", "t", "s", "n", "weighted_perturbation", "weighted_increment", "bound_2_pow_1_minus_k", "ok"]);
    let witness_json = match &search.witness {
        Some(w) => {
            let w = multiplicity_sequence(&f, w)?;
            let check = divergence_check(&w, k)?;
            for r in &check.rows {
                report.push(vec![
                    Cell::Int(r.k as u64),
                    Cell::Float(r.t),
                    Cell::Float(r.s),
                    Cell::Str(r.n.to_string()),
                    Cell::Float(r.weighted_perturbation),
                    Cell::Float(r.weighted_increment),
                    Cell::Float(r.bound),
                    Cell::Bool(r.ok),
                ]);
            }
            serde_json::to_value(w.to_json()).expect("witness serializes")
        }
        None => {
            let level = search.first_missing().expect("no witness means a missing level");
            let q = search.levels[level - 1].quotient;
            eprintln!("no witness: best quotient at level {level} is {q}, not above 2^{level}");
            json!({
                "function": f.id(),
                "params": f.params(),
                "K": k,
                "t": [],
                "s": [],
                "n": [],
                "first_missing_level": level,
            })
        }
    };
    if let Some(name) = side_name(cfg, "witness.json") {
        report.side_files.push((name, to_json_string(&witness_json)));
    }
    Ok(report)
}
