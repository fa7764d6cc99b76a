//! Exact Prohorov distance between discrete probability measures, the
//! finite-measure metric ρ̂ and the vague metric ρ̃ built from truncations.
//!
//! The Prohorov deficiency D(ε) = max_A μ(A) − ν(A^ε) (closed thickening) equals
//! μ(X) minus the max flow of a bipartite transport graph whose edges join atoms
//! at distance ≤ ε. D is a right-continuous step function with jumps only at
//! pairwise distances, so the infimum over ε is found by a search over those
//! breakpoints.

mod flow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundedness::{GroundSpace, MetricChoice, Point};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, LocallyFiniteMeasure};

/// Largest combined atom count accepted by [`prohorov`].
pub const PROHOROV_ATOM_CAP: usize = 10_000;

/// Largest combined atom count accepted by [`prohorov_oracle`].
pub const ORACLE_ATOM_CAP: usize = 20;

/// Mass tolerance for inputs declared to be probability measures.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Evidence for one evaluation of the deficiency D(ε).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficiencyCertificate {
    pub epsilon: f64,
    /// Indices into the source measure's atom list.
    pub witness_set: Vec<usize>,
    /// μ(witness) − ν(witness^ε).
    pub deficiency_value: f64,
    pub flow_value: f64,
}

impl DeficiencyCertificate {
    /// Recomputes μ(A) − ν(A^ε) for the witness set from scratch.
    pub fn recompute(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> f64 {
        subset_deficiency(mu, nu, metric, self.epsilon, |i| self.witness_set.binary_search(&i).is_ok())
    }
}

/// Result of [`prohorov_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProhorovReport {
    pub value: f64,
    pub metric: MetricChoice,
    /// Number of candidate breakpoints (distinct pairwise distances plus 0).
    pub breakpoints: usize,
    /// Number of max-flow solves performed.
    pub flow_solves: usize,
    /// D at the first breakpoint ε with D(ε) ≤ ε.
    pub feasible: DeficiencyCertificate,
    /// D at the breakpoint just below, whose witness shows that smaller ε fail.
    pub infeasible: Option<DeficiencyCertificate>,
}

/// Result of [`vague_dist`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VagueDistance {
    pub value: f64,
    /// Upper bound on the neglected tail of the series.
    pub error_bound: f64,
    /// 1 ∧ ρ̂(T_m μ, T_m ν) for m = 1..=M.
    pub terms: Vec<f64>,
}

fn scale_of(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    mu.total_mass().max(nu.total_mass()).max(1.0)
}

fn subset_deficiency(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: MetricChoice,
    eps: f64,
    in_set: impl Fn(usize) -> bool,
) -> f64 {
    let space = mu.space();
    let chosen: Vec<&Point> = mu
        .atoms()
        .iter()
        .enumerate()
        .filter(|(i, _)| in_set(*i))
        .map(|(_, a)| &a.x)
        .collect();
    let mass_a: f64 = mu.atoms().iter().enumerate().filter(|(i, _)| in_set(*i)).map(|(_, a)| a.w).sum();
    let mass_thick: f64 = nu
        .atoms()
        .iter()
        .filter(|b| chosen.iter().any(|x| space.distance(x, &b.x, metric) <= eps))
        .map(|b| b.w)
        .sum();
    mass_a - mass_thick
}

/// D(ε) = max over atom subsets A of μ(A) − ν(A^ε), with a min-cut witness.
pub fn deficiency(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    epsilon: f64,
    metric: MetricChoice,
) -> Result<DeficiencyCertificate> {
    mu.space().ensure_same(&nu.space())?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let dist = DistanceTable::new(mu, nu, metric);
    Ok(dist.certificate(mu, nu, epsilon))
}

/// Pairwise distances between the atoms of μ and ν.
struct DistanceTable {
    rows: usize,
    cols: usize,
    d: Vec<f64>,
}

impl DistanceTable {
    fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> Self {
        let space = mu.space();
        let rows = mu.len();
        let cols = nu.len();
        let d: Vec<f64> = mu
            .atoms()
            .par_iter()
            .flat_map_iter(|a| nu.atoms().iter().map(move |b| space.distance(&a.x, &b.x, metric)))
            .collect();
        DistanceTable { rows, cols, d }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.cols + j]
    }

    /// Sorted distinct distances together with 0.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.d.clone();
        b.push(0.0);
        b.par_sort_unstable_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn certificate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64) -> DeficiencyCertificate {
        let edges: Vec<Vec<u32>> = (0..self.rows)
            .map(|i| (0..self.cols).filter(|&j| self.get(i, j) <= eps).map(|j| j as u32).collect())
            .collect();
        let supply: Vec<f64> = mu.atoms().iter().map(|a| a.w).collect();
        let demand: Vec<f64> = nu.atoms().iter().map(|a| a.w).collect();
        let scale = scale_of(mu, nu);
        let flow = flow::bipartite_max_flow(&supply, &demand, &edges, 1e-15 * scale);
        let witness_set: Vec<usize> = (0..self.rows).filter(|&i| flow.source_side[i]).collect();
        let mut reached = vec![false; self.cols];
        for &i in &witness_set {
            for &j in &edges[i] {
                reached[j as usize] = true;
            }
        }
        let mass_a: f64 = witness_set.iter().map(|&i| supply[i]).sum();
        let mass_thick: f64 = (0..self.cols).filter(|&j| reached[j]).map(|j| demand[j]).sum();
        let mut deficiency_value = mass_a - mass_thick;
        if deficiency_value.abs() < 1e-12 * scale {
            deficiency_value = deficiency_value.max(0.0);
        }
        let cert = DeficiencyCertificate {
            epsilon: eps,
            witness_set,
            deficiency_value,
            flow_value: flow.value,
        };
        debug_assert!(
            (mu.total_mass() - cert.flow_value - cert.deficiency_value).abs() <= 1e-12 * scale,
            "deficiency certificate disagrees with flow: {cert:?}"
        );
        cert
    }
}

fn check_probability(mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let total = mu.total_mass();
    if !((total - 1.0).abs() <= PROBABILITY_TOL) {
        return Err(Error::NotProbability(total));
    }
    Ok(mu.map_weights(|_, w| w / total))
}

/// Exact Prohorov distance between probability measures, capped at 1.
///
/// Symmetric by construction: the arguments are put in a canonical order
/// before the one-sided computation.
pub fn prohorov(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> Result<f64> {
    Ok(prohorov_report(mu, nu, metric)?.value)
}

/// [`prohorov`] with the certificates that pin down the value.
pub fn prohorov_report(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> Result<ProhorovReport> {
    if canonical_order(mu, nu) {
        prohorov_one_sided(mu, nu, metric)
    } else {
        prohorov_one_sided(nu, mu, metric)
    }
}

fn canonical_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    use std::cmp::Ordering;
    for (a, b) in mu.atoms().iter().zip(nu.atoms()) {
        match a.x.total_cmp(&b.x).then(a.w.total_cmp(&b.w)) {
            Ordering::Equal => continue,
            ord => return ord == Ordering::Less,
        }
    }
    mu.len() <= nu.len()
}

/// inf{ε > 0 : μ(A) ≤ ν(A^ε) + ε for all A}, using only this one-sided condition.
pub fn prohorov_one_sided(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: MetricChoice,
) -> Result<ProhorovReport> {
    mu.space().ensure_same(&nu.space())?;
    let count = mu.len() + nu.len();
    if count > PROHOROV_ATOM_CAP {
        return Err(Error::SizeCap {
            count,
            cap: PROHOROV_ATOM_CAP,
        });
    }
    let mu = check_probability(mu)?;
    let nu = check_probability(nu)?;
    let table = DistanceTable::new(&mu, &nu, metric);
    let mut breaks = table.breakpoints();
    // Every breakpoint above 1 is dominated by the cap.
    if let Some(pos) = breaks.iter().position(|&b| b > 1.0) {
        breaks.truncate(pos);
    }
    let mut solves = 0usize;
    let mut eval = |k: usize| {
        solves += 1;
        table.certificate(&mu, &nu, breaks[k])
    };
    // D is non-increasing and the breakpoints increase, so the first k with
    // D(d_k) <= d_k splits the candidates; binary search finds it.
    let feasible_at = |c: &DeficiencyCertificate| c.deficiency_value <= c.epsilon;
    let last = breaks.len() - 1;
    let top = eval(last);
    let (value, feasible, infeasible) = if !feasible_at(&top) {
        let value = top.deficiency_value.min(1.0);
        (value, top.clone(), Some(top))
    } else {
        let (mut lo, mut hi) = (0usize, last);
        let mut hi_cert = top;
        let mut lo_cert: Option<DeficiencyCertificate> = None;
        let first = eval(0);
        if feasible_at(&first) {
            hi_cert = first;
        } else {
            lo_cert = Some(first);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let c = eval(mid);
                if feasible_at(&c) {
                    hi = mid;
                    hi_cert = c;
                } else {
                    lo = mid;
                    lo_cert = Some(c);
                }
            }
        }
        let mut value = hi_cert.epsilon;
        if let Some(c) = &lo_cert {
            value = value.min(c.deficiency_value);
        }
        (value.min(1.0), hi_cert, lo_cert)
    };
    Ok(ProhorovReport {
        value,
        metric,
        breakpoints: breaks.len(),
        flow_solves: solves,
        feasible,
        infeasible,
    })
}

/// Brute-force Prohorov distance: every subset of μ's atoms at every breakpoint.
pub fn prohorov_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> Result<f64> {
    mu.space().ensure_same(&nu.space())?;
    let count = mu.len() + nu.len();
    if count > ORACLE_ATOM_CAP {
        return Err(Error::SizeCap {
            count,
            cap: ORACLE_ATOM_CAP,
        });
    }
    let mu = check_probability(mu)?;
    let nu = check_probability(nu)?;
    let space: GroundSpace = mu.space();
    let mut breaks: Vec<f64> = vec![0.0];
    for a in mu.atoms() {
        for b in nu.atoms() {
            breaks.push(space.distance(&a.x, &b.x, metric));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let n = mu.len();
    let mut best: f64 = 1.0;
    for &eps in &breaks {
        let mut d_max: f64 = 0.0;
        for mask in 0u32..(1u32 << n) {
            let d = subset_deficiency(&mu, &nu, metric, eps, |i| mask & (1 << i) != 0);
            d_max = d_max.max(d);
        }
        best = best.min(eps.max(d_max));
    }
    Ok(best)
}

/// ρ̂(μ,ν) = |μ(X) − ν(X)| + (μ(X) ∧ ν(X)) · ρ̂₁(μ/μ(X), ν/ν(X)) with the Hu metric.
///
/// The second term is taken as 0 when either measure is zero.
pub fn finite_measure_dist(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.space().ensure_same(&nu.space())?;
    let a = mu.total_mass();
    let b = nu.total_mass();
    let diff = (a - b).abs();
    if a == 0.0 || b == 0.0 {
        return Ok(diff);
    }
    let p = prohorov(&mu.map_weights(|_, w| w / a), &nu.map_weights(|_, w| w / b), MetricChoice::Hu)?;
    Ok(diff + a.min(b) * p)
}

/// Number of series terms needed so that the tail 2^{-M} is at most `tol`.
pub fn vague_levels(tol: f64) -> Result<u32> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let mut m = 1u32;
    while 0.5f64.powi(m as i32) > tol {
        m += 1;
        if m > 1000 {
            return Err(Error::InvalidArgument(format!("tol {tol} is too small")));
        }
    }
    Ok(m)
}

/// Partial sum of ρ̃(μ,ν) = Σ_m 2^{-m} (1 ∧ ρ̂(T_m μ, T_m ν)) with tail bound ≤ tol.
pub fn vague_dist(mu: &LocallyFiniteMeasure, nu: &LocallyFiniteMeasure, tol: f64) -> Result<VagueDistance> {
    mu.space().ensure_same(&nu.space())?;
    let levels = vague_levels(tol)?;
    let terms: Vec<f64> = (1..=levels)
        .into_par_iter()
        .map(|m| -> Result<f64> {
            let a = mu.truncate(m)?;
            let b = nu.truncate(m)?;
            Ok(finite_measure_dist(&a, &b)?.min(1.0))
        })
        .collect::<Result<_>>()?;
    let value = terms
        .iter()
        .enumerate()
        .map(|(i, t)| t * 0.5f64.powi(i as i32 + 1))
        .sum();
    Ok(VagueDistance {
        value,
        error_bound: 0.5f64.powi(levels as i32),
        terms,
    })
}
