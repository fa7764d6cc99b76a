//! The subcommands. Each returns its verdict and the files to write; nothing
//! touches the output directory until the command has finished.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::json;
use vague_core::convergence::{catalogue_entry, cross_validate, Tri, DEFAULT_GRID, DEFAULT_TOL};
use vague_core::metrics::{finite_measure_dist, prohorov_report, vague_dist, PROBABILITY_TOL};
use vague_core::random_measures::{test_convergence_in_distribution, RandomMeasureModel, TesterOptions};
use vague_core::selftest::{run_all, SelftestOptions};
use vague_core::test_functions::{lipschitz_battery, multiplicative_family};
use vague_core::{DiscreteMeasure, Error, FunctionFamily, GroundSpace, LocallyFiniteMeasure};

use crate::config::{
    self, BatteryKind, BatterySpec, ConvergeConfig, DistConfig, DistanceKind, LaplaceConfig, LaplaceSequence,
    SequenceSpec, SimulateConfig,
};
use crate::formula::inline_sequence;
use crate::ConfigError;

/// Realizations above this count are refused.
pub const MAX_REALIZATIONS: usize = 100_000;

/// What a command produced.
pub struct Outcome {
    /// `None` for commands without a verdict (they exit 0).
    pub verdict: Option<Tri>,
    /// Lines printed to stdout.
    pub summary: Vec<String>,
    /// (file name, contents) pairs written to the output directory.
    pub files: Vec<(String, Vec<u8>)>,
}

/// Options shared by every subcommand.
pub struct RunOptions {
    pub seed: Option<u64>,
    pub verbose: bool,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

fn same_space(expected: Option<GroundSpace>, actual: GroundSpace) -> anyhow::Result<()> {
    match expected {
        Some(e) if e != actual => Err(Error::SpaceMismatch {
            left: e.to_string(),
            right: actual.to_string(),
        }
        .into()),
        _ => Ok(()),
    }
}

fn check_positive(name: &str, v: f64) -> anyhow::Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(format!("field `{name}`: must be finite and > 0, got {v}")))
    }
}

fn check_grid(grid: &[u64]) -> anyhow::Result<()> {
    if grid.is_empty() || grid.contains(&0) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_error("field `n_grid`: must be non-empty, positive and strictly increasing"));
    }
    Ok(())
}

fn require_seed(config_seed: Option<u64>, opts: &RunOptions) -> anyhow::Result<u64> {
    opts.seed
        .or(config_seed)
        .ok_or_else(|| config_error("field `seed`: required for stochastic commands (or pass --seed)"))
}

fn build_battery(space: GroundSpace, spec: &BatterySpec) -> anyhow::Result<FunctionFamily> {
    Ok(match spec.kind {
        BatteryKind::Lipschitz => lipschitz_battery(space, spec.size, spec.seed)?,
        BatteryKind::Multiplicative => multiplicative_family(space, spec.size, spec.seed)?,
    })
}

const DEFAULT_BATTERY: BatterySpec = BatterySpec {
    kind: BatteryKind::Lipschitz,
    size: 8,
    seed: 1,
};

fn load_measure(config_path: &Path, p: &Path) -> anyhow::Result<DiscreteMeasure> {
    let path = config::resolve(config_path, p);
    Ok(config::load(&path)?)
}

fn is_probability(mu: &DiscreteMeasure) -> bool {
    (mu.total_mass() - 1.0).abs() <= PROBABILITY_TOL
}

pub fn dist(config_path: &Path, opts: &RunOptions) -> anyhow::Result<Outcome> {
    let cfg: DistConfig = config::load(config_path)?;
    check_positive("tol", cfg.tol)?;
    let mu = load_measure(config_path, &cfg.mu)?;
    let nu = load_measure(config_path, &cfg.nu)?;
    same_space(cfg.space, mu.space())?;
    same_space(Some(mu.space()), nu.space())?;
    let explicit = cfg.distances.is_some();
    let wanted = cfg
        .distances
        .unwrap_or_else(|| vec![DistanceKind::Prohorov, DistanceKind::RhoHat, DistanceKind::RhoTilde]);

    let mut report = serde_json::Map::new();
    report.insert("space".into(), json!(mu.space()));
    report.insert("mu".into(), json!(cfg.mu));
    report.insert("nu".into(), json!(cfg.nu));
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for kind in wanted {
        match kind {
            DistanceKind::Prohorov => {
                if !explicit && !(is_probability(&mu) && is_probability(&nu)) {
                    notes.push("prohorov skipped: inputs are not both probability measures".to_string());
                    continue;
                }
                let r = prohorov_report(&mu, &nu, cfg.metric)?;
                summary.push(format!("prohorov = {}", r.value));
                rows.push(vec!["prohorov".into(), r.value.to_string(), "0".into()]);
                report.insert("prohorov".into(), json!(r));
            }
            DistanceKind::RhoHat => {
                let v = finite_measure_dist(&mu, &nu)?;
                summary.push(format!("rho_hat = {v}"));
                rows.push(vec!["rho_hat".into(), v.to_string(), "0".into()]);
                report.insert("rho_hat".into(), json!(v));
            }
            DistanceKind::RhoTilde => {
                let v = vague_dist(
                    &LocallyFiniteMeasure::from_finite(mu.clone()),
                    &LocallyFiniteMeasure::from_finite(nu.clone()),
                    cfg.tol,
                )?;
                summary.push(format!("rho_tilde = {} (error bound {})", v.value, v.error_bound));
                rows.push(vec!["rho_tilde".into(), v.value.to_string(), v.error_bound.to_string()]);
                report.insert("rho_tilde".into(), json!(v));
            }
        }
    }
    if opts.verbose {
        for n in &notes {
            eprintln!("{n}");
        }
    }
    report.insert("notes".into(), json!(notes));
    Ok(Outcome {
        verdict: None,
        summary,
        files: vec![
            ("dist.json".into(), json_bytes(&report)?),
            ("dist.csv".into(), csv_bytes(&["distance", "value", "error_bound"], rows)?),
        ],
    })
}

pub fn converge(config_path: &Path, opts: &RunOptions) -> anyhow::Result<Outcome> {
    let cfg: ConvergeConfig = config::load(config_path)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    check_positive("tol", tol)?;
    let n_grid = cfg.n_grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    check_grid(&n_grid)?;
    let (seq, default_battery, default_regions) = match &cfg.sequence {
        SequenceSpec::Catalogue(name) => {
            let e = catalogue_entry(name).map_err(|e| config_error(format!("field `sequence.catalogue`: {e}")))?;
            (e.sequence, Some(e.battery), Some(e.regions))
        }
        SequenceSpec::Inline(spec) => (inline_sequence(spec)?, None, None),
    };
    same_space(cfg.space, seq.space())?;
    let battery = match (&cfg.battery, default_battery) {
        (Some(spec), _) => build_battery(seq.space(), spec)?,
        (None, Some(b)) => b,
        (None, None) => build_battery(seq.space(), &DEFAULT_BATTERY)?,
    };
    let regions = match (cfg.regions, default_regions) {
        (Some(r), _) if !r.is_empty() => r,
        (None, Some(r)) => r,
        _ => return Err(config_error("field `regions`: required and non-empty for inline sequences")),
    };
    if opts.verbose {
        eprintln!("{}: {} battery members, {} regions, grid {:?}", seq.label, battery.len(), regions.len(), n_grid);
    }
    let report = cross_validate(&seq, &battery, &regions, &n_grid, tol)?;
    let verdict = if report.consistent {
        report.consensus.unwrap_or(Tri::Inconclusive)
    } else {
        Tri::Inconclusive
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for o in &report.outcomes {
        match &o.verdict {
            Some(v) => {
                summary.push(format!("{}: {}", o.checker, v.converged));
                for r in &v.rows {
                    rows.push(vec![
                        format!("{}:{}", o.checker, r.probe_id),
                        r.n.to_string(),
                        r.value.to_string(),
                        r.limit.to_string(),
                        r.gap.to_string(),
                    ]);
                }
            }
            None => summary.push(format!("{}: {}", o.checker, o.note.as_deref().unwrap_or("not applicable"))),
        }
    }
    summary.push(format!("verdict: {verdict}"));
    let out = json!({ "verdict": verdict, "tol": tol, "n_grid": n_grid, "report": report });
    Ok(Outcome {
        verdict: Some(verdict),
        summary,
        files: vec![
            ("converge.json".into(), json_bytes(&out)?),
            ("converge.csv".into(), csv_bytes(&["probe_id", "n", "value", "limit", "gap"], rows)?),
        ],
    })
}

pub fn simulate(config_path: &Path, opts: &RunOptions) -> anyhow::Result<Outcome> {
    let cfg: SimulateConfig = config::load(config_path)?;
    let seed = require_seed(cfg.seed, opts)?;
    if cfg.level == 0 {
        return Err(config_error("field `level`: must be at least 1"));
    }
    if cfg.realizations == 0 || cfg.realizations > MAX_REALIZATIONS {
        return Err(config_error(format!("field `realizations`: must be in 1..={MAX_REALIZATIONS}")));
    }
    let model = RandomMeasureModel::new(cfg.model.clone()).context("invalid model")?;
    same_space(cfg.space, model.space())?;
    let dim = model.space().dim();
    // Realization r uses seed + r, so one realization with seed s matches `sample(m, s)`.
    let samples = (0..cfg.realizations as u64)
        .map(|r| model.sample(cfg.level, seed.wrapping_add(r)))
        .collect::<vague_core::Result<Vec<_>>>()?;
    let mut header = vec!["realization".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.push("w".into());
    let mut rows = Vec::new();
    for (r, mu) in samples.iter().enumerate() {
        for a in mu.atoms() {
            let mut row = vec![r.to_string()];
            row.extend(a.x.coords().iter().map(f64::to_string));
            row.push(a.w.to_string());
            rows.push(row);
        }
    }
    let counts: Vec<usize> = samples.iter().map(DiscreteMeasure::len).collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let summary = vec![format!(
        "{} realizations at level {}, mean atom count {mean}",
        cfg.realizations, cfg.level
    )];
    let out = json!({ "model": cfg.model, "level": cfg.level, "seed": seed, "realizations": samples });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Outcome {
        verdict: None,
        summary,
        files: vec![
            ("simulate.json".into(), json_bytes(&out)?),
            ("simulate.csv".into(), csv_bytes(&header, rows)?),
        ],
    })
}

pub fn laplace(config_path: &Path, opts: &RunOptions) -> anyhow::Result<Outcome> {
    let cfg: LaplaceConfig = config::load(config_path)?;
    let seed = require_seed(cfg.seed, opts)?;
    let defaults = TesterOptions::default();
    let tester = TesterOptions {
        n_grid: cfg.n_grid.clone().unwrap_or(defaults.n_grid),
        reps: cfg.reps.unwrap_or(defaults.reps),
        seed,
        z_threshold: cfg.z_threshold.unwrap_or(defaults.z_threshold),
        quad_tol: cfg.quad_tol.unwrap_or(defaults.quad_tol),
        require_monotone: cfg.require_monotone,
    };
    check_grid(&tester.n_grid)?;
    check_positive("z_threshold", tester.z_threshold)?;
    check_positive("quad_tol", tester.quad_tol)?;
    let target = RandomMeasureModel::new(cfg.target.clone()).context("invalid target model")?;
    same_space(cfg.space, target.space())?;
    let battery = build_battery(target.space(), cfg.battery.as_ref().unwrap_or(&DEFAULT_BATTERY))?;
    let sequence = cfg.sequence.clone();
    let constant = match &sequence {
        LaplaceSequence::Constant { model } => Some(RandomMeasureModel::new(model.clone()).context("invalid sequence model")?),
        LaplaceSequence::EmpiricalExtremes { .. } => None,
    };
    let model_at = |n: u64| -> vague_core::Result<RandomMeasureModel> {
        match (&sequence, &constant) {
            (_, Some(m)) => Ok(m.clone()),
            (LaplaceSequence::EmpiricalExtremes { alpha }, None) => RandomMeasureModel::empirical_extremes(n, *alpha),
            (LaplaceSequence::Constant { .. }, None) => unreachable!("constant models are built above"),
        }
    };
    if opts.verbose {
        eprintln!("{} battery members, grid {:?}, {} reps", battery.len(), tester.n_grid, tester.reps);
    }
    let report = test_convergence_in_distribution(&model_at, &target, &battery, &tester)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.f_id.clone(),
                r.n.to_string(),
                r.estimate.to_string(),
                r.stderr.to_string(),
                r.exact.map(|e| e.to_string()).unwrap_or_default(),
                r.z.to_string(),
            ]
        })
        .collect();
    let mut summary: Vec<String> = report
        .max_abs_z
        .iter()
        .map(|(n, z)| format!("n = {n}: max |z| = {z:.3}"))
        .collect();
    summary.push(format!("verdict: {} (threshold {})", report.verdict, report.z_threshold));
    summary.push(report.caveat.clone());
    Ok(Outcome {
        verdict: Some(report.verdict),
        summary,
        files: vec![
            ("laplace.json".into(), json_bytes(&report)?),
            ("laplace.csv".into(), csv_bytes(&["f_id", "n", "estimate", "stderr", "exact", "z"], rows)?),
        ],
    })
}

pub fn selftest(corrupt_bump: bool, opts: &RunOptions) -> anyhow::Result<Outcome> {
    if opts.seed.is_some() && opts.verbose {
        eprintln!("selftest uses fixed seeds; --seed is ignored");
    }
    let report = run_all(SelftestOptions { corrupt_bump })?;
    let mut summary: Vec<String> = report.criteria.iter().map(|c| c.line()).collect();
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    summary.push(format!("{passed}/{} criteria passed", report.criteria.len()));
    Ok(Outcome {
        verdict: Some(if report.passed { Tri::Pass } else { Tri::Fail }),
        summary,
        files: vec![("selftest.json".into(), json_bytes(&report)?)],
    })
}
