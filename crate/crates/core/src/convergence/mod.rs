//! Convergence diagnostics for deterministic measure sequences.
//!
//! Four checkers probe μ_n → μ on a finite grid of n: integrals of test
//! functions, masses of continuity regions, point matching inside regions, and
//! the vague metric ρ̃. Each yields a tri-state [`Verdict`] with a 10× band
//! between pass and fail.

mod catalogue;
mod matching;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundedness::{GroundSpace, Region};
use crate::error::{Error, Result};
use crate::measures::LocallyFiniteMeasure;
use crate::metrics::vague_dist;
use crate::test_functions::FunctionFamily;

pub use catalogue::{catalogue, catalogue_entry, CatalogueEntry, CATALOGUE_NAMES};
pub use matching::{match_points, Matching};

/// Default grid used by the catalogue checks.
pub const DEFAULT_GRID: [u64; 4] = [10, 100, 1_000, 10_000];

/// Default tolerance used by the catalogue checks.
pub const DEFAULT_TOL: f64 = 1e-3;

/// The vague metric is always summed at least this deep, so its value (and the
/// verdict) does not depend on the tolerance through the truncation point.
const METRIC_MIN_TOL: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tri::Pass => "pass",
            Tri::Fail => "fail",
            Tri::Inconclusive => "inconclusive",
        })
    }
}

pub type SequenceGenerator = dyn Fn(u64) -> Result<LocallyFiniteMeasure> + Send + Sync;

/// n ↦ μ_n together with a claimed limit μ.
#[derive(Clone)]
pub struct MeasureSequence {
    pub label: String,
    space: GroundSpace,
    generator: Arc<SequenceGenerator>,
    limit: LocallyFiniteMeasure,
}

impl fmt::Debug for MeasureSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSequence")
            .field("label", &self.label)
            .field("space", &self.space)
            .finish()
    }
}

impl MeasureSequence {
    /// `generator` must be pure: the same n always yields the same measure.
    pub fn new(
        label: impl Into<String>,
        limit: LocallyFiniteMeasure,
        generator: impl Fn(u64) -> Result<LocallyFiniteMeasure> + Send + Sync + 'static,
    ) -> Self {
        MeasureSequence {
            label: label.into(),
            space: limit.space(),
            generator: Arc::new(generator),
            limit,
        }
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn term(&self, n: u64) -> Result<LocallyFiniteMeasure> {
        let mu = (self.generator)(n)?;
        self.space.ensure_same(&mu.space())?;
        Ok(mu)
    }

    pub fn limit(&self) -> &LocallyFiniteMeasure {
        &self.limit
    }
}

/// One grid evaluation of one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub probe_id: String,
    pub n: u64,
    pub value: f64,
    pub limit: f64,
    /// Distance between value and limit.
    pub gap: f64,
    /// Upper bound on the gap including numerical truncation (equal to `gap`
    /// for exact checkers).
    pub gap_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub probe_id: String,
    pub final_gap: f64,
    pub status: Tri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checker: String,
    pub converged: Tri,
    pub tol: f64,
    pub largest_n: u64,
    pub probes: Vec<ProbeSummary>,
    pub rows: Vec<ProbeRow>,
    /// Probes skipped because the limit charges their boundary.
    pub excluded: Vec<String>,
}

/// Status of one probe from its gaps along the grid (in grid order).
///
/// Pass: the last gap is within tol and, over the second half of the grid,
/// every step either does not increase or lands within tol. Fail: the last gap
/// is at least 10·tol. Otherwise inconclusive.
fn probe_status(rows: &[&ProbeRow], tol: f64) -> Tri {
    let Some(last) = rows.last() else {
        return Tri::Inconclusive;
    };
    if last.gap >= 10.0 * tol || last.gap.is_nan() {
        return Tri::Fail;
    }
    let settled = (rows.len() / 2).max(1)..rows.len();
    let eventually_monotone = settled
        .into_iter()
        .all(|i| rows[i].gap_upper <= tol || rows[i].gap_upper <= rows[i - 1].gap_upper);
    if last.gap_upper <= tol && eventually_monotone {
        Tri::Pass
    } else {
        Tri::Inconclusive
    }
}

impl Verdict {
    /// Assembles a verdict from rows listed probe by probe, grid order within a probe.
    pub fn from_rows(checker: &str, tol: f64, rows: Vec<ProbeRow>, excluded: Vec<String>) -> Verdict {
        let mut ids: Vec<&str> = Vec::new();
        for r in &rows {
            if !ids.contains(&r.probe_id.as_str()) {
                ids.push(&r.probe_id);
            }
        }
        let probes: Vec<ProbeSummary> = ids
            .iter()
            .map(|id| {
                let mine: Vec<&ProbeRow> = rows.iter().filter(|r| r.probe_id == *id).collect();
                ProbeSummary {
                    probe_id: id.to_string(),
                    final_gap: mine.last().map(|r| r.gap).unwrap_or(f64::NAN),
                    status: probe_status(&mine, tol),
                }
            })
            .collect();
        let converged = if probes.is_empty() {
            Tri::Inconclusive
        } else if probes.iter().any(|p| p.status == Tri::Fail) {
            Tri::Fail
        } else if probes.iter().all(|p| p.status == Tri::Pass) {
            Tri::Pass
        } else {
            Tri::Inconclusive
        };
        let largest_n = rows.iter().map(|r| r.n).max().unwrap_or(0);
        Verdict {
            checker: checker.to_string(),
            converged,
            tol,
            largest_n,
            probes,
            rows,
            excluded,
        }
    }
}

fn check_grid(n_grid: &[u64], tol: f64) -> Result<()> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::InvalidArgument("n_grid must be a non-empty list of positive integers".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    Ok(())
}

fn terms(seq: &MeasureSequence, n_grid: &[u64]) -> Result<Vec<LocallyFiniteMeasure>> {
    n_grid.par_iter().map(|&n| seq.term(n)).collect()
}

/// |μ_n(f) − μ(f)| for every battery member.
pub fn check_vague_functions(
    seq: &MeasureSequence,
    battery: &FunctionFamily,
    n_grid: &[u64],
    tol: f64,
) -> Result<Verdict> {
    check_grid(n_grid, tol)?;
    seq.space().ensure_same(&battery.space())?;
    let mus = terms(seq, n_grid)?;
    let rows: Vec<Vec<ProbeRow>> = battery
        .members()
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<Vec<ProbeRow>> {
            let limit = f.integrate_lf(seq.limit())?;
            n_grid
                .iter()
                .zip(&mus)
                .map(|(&n, mu)| {
                    let value = f.integrate_lf(mu)?;
                    let gap = (value - limit).abs();
                    Ok(ProbeRow {
                        probe_id: format!("f{i}"),
                        n,
                        value,
                        limit,
                        gap,
                        gap_upper: gap,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Verdict::from_rows("functions", tol, rows.concat(), Vec::new()))
}

/// Level containing a bounded region, or an error for unbounded ones.
fn region_level(space: &GroundSpace, region: &Region) -> Result<u32> {
    space
        .is_bounded(region)?
        .ok_or_else(|| Error::Unbounded(format!("probe region {region:?} is not bounded")))
}

/// Splits regions into probes and those excluded for μ(∂B) > 0.
fn continuity_regions(seq: &MeasureSequence, regions: &[Region]) -> Result<(Vec<(usize, u32)>, Vec<String>)> {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (i, b) in regions.iter().enumerate() {
        let level = region_level(&seq.space(), b)?;
        let boundary = seq.limit().level(level)?.boundary_mass(b)?;
        if boundary > 0.0 {
            excluded.push(format!("B{i}"));
        } else {
            kept.push((i, level));
        }
    }
    Ok((kept, excluded))
}

/// |μ_n(B) − μ(B)| for every region with μ(∂B) = 0.
pub fn check_portmanteau(seq: &MeasureSequence, regions: &[Region], n_grid: &[u64], tol: f64) -> Result<Verdict> {
    check_grid(n_grid, tol)?;
    let (kept, excluded) = continuity_regions(seq, regions)?;
    let mus = terms(seq, n_grid)?;
    let mut rows = Vec::new();
    for (i, level) in kept {
        let b = &regions[i];
        let limit = seq.limit().level(level)?.mass(b)?;
        for (&n, mu) in n_grid.iter().zip(&mus) {
            let value = mu.level(level)?.mass(b)?;
            let gap = (value - limit).abs();
            rows.push(ProbeRow {
                probe_id: format!("B{i}"),
                n,
                value,
                limit,
                gap,
                gap_upper: gap,
            });
        }
    }
    Ok(Verdict::from_rows("portmanteau", tol, rows, excluded))
}

/// Maximal bottleneck displacement inside each continuity region; a count
/// mismatch counts as an infinite gap.
///
/// Errors with [`Error::NotPointMeasure`] when the limit or a grid term is not
/// integer valued on a probe region.
pub fn check_point_matching(
    seq: &MeasureSequence,
    regions: &[Region],
    n_grid: &[u64],
    tol: f64,
) -> Result<Verdict> {
    check_grid(n_grid, tol)?;
    let (kept, excluded) = continuity_regions(seq, regions)?;
    let mus = terms(seq, n_grid)?;
    let mut rows = Vec::new();
    for (i, level) in kept {
        let b = &regions[i];
        let limit = seq.limit().level(level)?;
        for (&n, mu) in n_grid.iter().zip(&mus) {
            let value = match match_points(&*mu.level(level)?, &limit, b) {
                Ok(m) => m.max_displacement,
                Err(Error::CountMismatch { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            rows.push(ProbeRow {
                probe_id: format!("B{i}"),
                n,
                value,
                limit: 0.0,
                gap: value,
                gap_upper: value,
            });
        }
    }
    Ok(Verdict::from_rows("matching", tol, rows, excluded))
}

/// ρ̃(μ_n, μ) summed to tail ≤ tol/2; the pass rule uses value + tail bound.
pub fn check_vague_metric(seq: &MeasureSequence, n_grid: &[u64], tol: f64) -> Result<Verdict> {
    check_grid(n_grid, tol)?;
    let mus = terms(seq, n_grid)?;
    let series_tol = (tol / 2.0).min(METRIC_MIN_TOL);
    let rows: Vec<ProbeRow> = n_grid
        .par_iter()
        .zip(&mus)
        .map(|(&n, mu)| -> Result<ProbeRow> {
            let d = vague_dist(mu, seq.limit(), series_tol)?;
            Ok(ProbeRow {
                probe_id: "rho".into(),
                n,
                value: d.value,
                limit: 0.0,
                gap: d.value,
                gap_upper: d.value + d.error_bound,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Verdict::from_rows("metric", tol, rows, Vec::new()))
}

/// Outcome of one checker inside [`cross_validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerOutcome {
    pub checker: String,
    /// `None` when the checker does not apply (reason in `note`).
    pub verdict: Option<Verdict>,
    pub note: Option<String>,
}

impl CheckerOutcome {
    pub fn status(&self) -> Option<Tri> {
        self.verdict.as_ref().map(|v| v.converged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub label: String,
    pub outcomes: Vec<CheckerOutcome>,
    /// `agreement[i][j]`: checkers i and j gave the same tri-state; `None` if either is not applicable.
    pub agreement: Vec<Vec<Option<bool>>>,
    /// True when every applicable checker gave the same tri-state.
    pub consistent: bool,
    /// The common tri-state when consistent.
    pub consensus: Option<Tri>,
}

/// Runs all applicable checkers and compares their verdicts.
pub fn cross_validate(
    seq: &MeasureSequence,
    battery: &FunctionFamily,
    regions: &[Region],
    n_grid: &[u64],
    tol: f64,
) -> Result<CrossReport> {
    let outcome = |name: &str, r: Result<Verdict>| -> Result<CheckerOutcome> {
        match r {
            Ok(v) => Ok(CheckerOutcome {
                checker: name.into(),
                verdict: Some(v),
                note: None,
            }),
            Err(Error::NotPointMeasure(why)) => Ok(CheckerOutcome {
                checker: name.into(),
                verdict: None,
                note: Some(format!("not applicable: {why}")),
            }),
            Err(e) => Err(e),
        }
    };
    let outcomes = vec![
        outcome("functions", check_vague_functions(seq, battery, n_grid, tol))?,
        outcome("portmanteau", check_portmanteau(seq, regions, n_grid, tol))?,
        outcome("matching", check_point_matching(seq, regions, n_grid, tol))?,
        outcome("metric", check_vague_metric(seq, n_grid, tol))?,
    ];
    let statuses: Vec<Option<Tri>> = outcomes.iter().map(CheckerOutcome::status).collect();
    let agreement = statuses
        .iter()
        .map(|a| statuses.iter().map(|b| Some(a.as_ref()? == b.as_ref()?)).collect())
        .collect();
    let applicable: Vec<Tri> = statuses.iter().flatten().copied().collect();
    let consistent = applicable.windows(2).all(|w| w[0] == w[1]);
    Ok(CrossReport {
        label: seq.label.clone(),
        outcomes,
        agreement,
        consistent,
        consensus: if consistent { applicable.first().copied() } else { None },
    })
}
