//! Built-in acceptance suite: one check per criterion plus a bump sandwich
//! check with an optional injected fault.
//!
//! Every check is seeded, so reports are reproducible byte for byte.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::boundedness::{GroundSpace, MetricChoice, Point, Region};
use crate::convergence::{catalogue_entry, check_portmanteau, cross_validate, Tri, DEFAULT_GRID, DEFAULT_TOL};
use crate::error::Result;
use crate::measures::{DiscreteMeasure, LocallyFiniteMeasure};
use crate::metrics::{finite_measure_dist, prohorov, prohorov_oracle, vague_dist};
use crate::random_measures::{
    laplace_mc, laplace_mc_batch, laplace_poisson_exact, sample_empirical_extremes, sample_poisson,
    test_convergence_in_distribution, IntensityMeasure, RandomMeasureModel, TesterOptions, DEFAULT_QUAD_TOL,
};
use crate::rng::{CounterRng, StreamKey};
use crate::test_functions::{lipschitz_battery, multiplicative_family, FunctionFamily, TestFunction};

/// Slack allowed in metric axiom checks.
pub const AXIOM_SLACK: f64 = 1e-9;
/// Agreement required between the exact and brute-force Prohorov distances.
pub const ORACLE_TOL: f64 = 1e-12;
/// Quadrature tolerance for the Laplace sandwich check.
pub const SANDWICH_QUAD_TOL: f64 = 1e-6;

const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestOptions {
    /// Replace the bump by a slightly shrunken copy (fault injection).
    pub corrupt_bump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl CriterionResult {
    fn new(id: &str, name: &str, passed: bool, detail: String) -> Self {
        CriterionResult {
            id: id.into(),
            name: name.into(),
            passed,
            detail,
        }
    }

    /// `[PASS] C1 name: detail`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Identifiers accepted by [`run_criterion`], in run order.
pub const CRITERIA: [&str; 10] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "bump"];

pub fn run_criterion(id: &str, opts: SelftestOptions) -> Result<CriterionResult> {
    match id {
        "C1" => prohorov_oracle_equivalence(),
        "C2" => metric_axioms(),
        "C3" => boundedness_coincidence(),
        "C4" => criterion_equivalence(),
        "C5" => monotone_approximants(),
        "C6" => poisson_sampler_statistics(),
        "C7" => laplace_mc_vs_quadrature(),
        "C8" => convergence_in_distribution(),
        "C9" => multiplicative_family_route(),
        "bump" => bump_sandwich(opts.corrupt_bump),
        other => Err(crate::Error::InvalidArgument(format!(
            "unknown criterion {other:?}; known: {}",
            CRITERIA.join(", ")
        ))),
    }
}

pub fn run_all(opts: SelftestOptions) -> Result<SelftestReport> {
    let criteria = CRITERIA
        .iter()
        .map(|id| run_criterion(id, opts))
        .collect::<Result<Vec<_>>>()?;
    let passed = criteria.iter().all(|c| c.passed);
    Ok(SelftestReport { criteria, passed })
}

/// The four space kinds used throughout the suite.
pub fn sample_spaces() -> [GroundSpace; 4] {
    [
        GroundSpace::euclidean(2).expect("valid"),
        GroundSpace::weak(1).expect("valid"),
        GroundSpace::punctured(2, false).expect("valid"),
        GroundSpace::halfline(),
    ]
}

fn log_uniform(rng: &mut CounterRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.open01() * (hi.ln() - lo.ln())).exp()
}

/// A random point of `space` lying in K_`level`.
pub fn random_point(space: &GroundSpace, rng: &mut CounterRng, level: u32) -> Point {
    let inner = 1.0 / level as f64;
    loop {
        let p = match space.dim() {
            1 => {
                let x = if space.has_forbidden_set() {
                    log_uniform(rng, inner.max(0.05), 4.0)
                } else {
                    6.0 * rng.open01() - 3.0
                };
                Point::scalar(x)
            }
            _ => {
                if space.has_forbidden_set() {
                    let r = log_uniform(rng, inner.max(0.05), 3.0);
                    let a = std::f64::consts::TAU * rng.open01();
                    Point::new(vec![r * a.cos(), r * a.sin()])
                } else {
                    Point::new(vec![6.0 * rng.open01() - 3.0, 6.0 * rng.open01() - 3.0])
                }
            }
        };
        if space.in_level(&p, level) {
            return p;
        }
    }
}

/// Random discrete measure with 1..=`max_atoms` atoms inside K_`level`.
/// Atoms are reused from `share` with probability 1/3 to create ties.
pub fn random_measure(
    space: &GroundSpace,
    key: StreamKey,
    max_atoms: usize,
    probability: bool,
    level: u32,
    share: Option<&DiscreteMeasure>,
) -> DiscreteMeasure {
    let mut rng = key.rng();
    let count = 1 + (rng.open01() * max_atoms as f64) as usize;
    let count = count.min(max_atoms);
    let mut atoms: Vec<(Point, f64)> = Vec::with_capacity(count);
    for _ in 0..count {
        let x = match share {
            Some(s) if !s.is_empty() && rng.open01() < 1.0 / 3.0 => {
                let i = ((rng.open01() * s.len() as f64) as usize).min(s.len() - 1);
                s.atoms()[i].x.clone()
            }
            _ => random_point(space, &mut rng, level),
        };
        if atoms.iter().any(|(p, _)| *p == x) {
            continue;
        }
        atoms.push((x, 0.1 + 2.0 * rng.open01()));
    }
    if probability {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        atoms.iter_mut().for_each(|a| a.1 /= total);
    }
    DiscreteMeasure::new(*space, atoms).expect("points are valid by construction")
}

fn prohorov_oracle_equivalence() -> Result<CriterionResult> {
    let root = StreamKey::new(SEED).child(1);
    let spaces = sample_spaces();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..200u64 {
        let space = spaces[i as usize % 4];
        let metric = if i % 8 < 4 { MetricChoice::Hu } else { MetricChoice::Base };
        let key = root.child(i);
        let mu = random_measure(&space, key.child(0), 10, true, 20, None);
        let nu = random_measure(&space, key.child(1), 10, true, 20, Some(&mu));
        let fast = prohorov(&mu, &nu, metric)?;
        let slow = prohorov_oracle(&mu, &nu, metric)?;
        let err = (fast - slow).abs();
        worst = worst.max(err);
        if err > ORACLE_TOL {
            failures += 1;
        }
    }
    Ok(CriterionResult::new(
        "C1",
        "prohorov oracle equivalence",
        failures == 0,
        format!("200 instances, <= 10 atoms per measure, 4 space kinds; max |exact - oracle| = {worst:.1e} (tol {ORACLE_TOL:.0e})"),
    ))
}

/// Symmetry, identity and triangle violations over seeded triples.
#[derive(Debug, Default, Clone, Copy)]
pub struct AxiomTally {
    pub triples: usize,
    pub violations: usize,
    pub worst_triangle_excess: f64,
}

fn tally_axioms<T: PartialEq>(
    tally: &mut AxiomTally,
    (a, b, c): (&T, &T, &T),
    d: &dyn Fn(&T, &T) -> Result<f64>,
) -> Result<()> {
    let (ab, ba, bc, ac, aa) = (d(a, b)?, d(b, a)?, d(b, c)?, d(a, c)?, d(a, a)?);
    let excess = ac - ab - bc;
    tally.triples += 1;
    tally.worst_triangle_excess = tally.worst_triangle_excess.max(excess);
    let symmetric = (ab - ba).abs() <= AXIOM_SLACK;
    let identity = aa.abs() <= AXIOM_SLACK && (a == b || ab > 0.0);
    let nonneg = ab >= 0.0 && ac >= 0.0 && bc >= 0.0;
    if !(symmetric && identity && nonneg && excess <= AXIOM_SLACK) {
        tally.violations += 1;
    }
    Ok(())
}

fn metric_axioms() -> Result<CriterionResult> {
    let root = StreamKey::new(SEED).child(2);
    let spaces = sample_spaces();
    let mut parts = Vec::new();
    let mut ok = true;

    let mut t = AxiomTally::default();
    for i in 0..10_000u64 {
        let space = spaces[i as usize % 4];
        let mut rng = root.child(0).child(i).rng();
        let pts: Vec<Point> = (0..3).map(|_| random_point(&space, &mut rng, 20)).collect();
        tally_axioms(&mut t, (&pts[0], &pts[1], &pts[2]), &|x, y| Ok(space.hu_metric(x, y)))?;
    }
    ok &= t.violations == 0;
    parts.push(format!("hu_metric {} triples {} violations", t.triples, t.violations));

    let measures = |k: u64, i: u64, prob: bool, level: u32| -> Vec<DiscreteMeasure> {
        let space = spaces[i as usize % 4];
        let key = root.child(k).child(i);
        let a = random_measure(&space, key.child(0), 6, prob, level, None);
        let b = random_measure(&space, key.child(1), 6, prob, level, Some(&a));
        let c = random_measure(&space, key.child(2), 6, prob, level, Some(&b));
        vec![a, b, c]
    };

    let mut t = AxiomTally::default();
    for i in 0..1_000u64 {
        let m = measures(1, i, true, 20);
        tally_axioms(&mut t, (&m[0], &m[1], &m[2]), &|x, y| prohorov(x, y, MetricChoice::Hu))?;
    }
    ok &= t.violations == 0;
    parts.push(format!("prohorov {} triples {} violations", t.triples, t.violations));

    let mut t = AxiomTally::default();
    for i in 0..1_000u64 {
        let m = measures(2, i, false, 20);
        tally_axioms(&mut t, (&m[0], &m[1], &m[2]), &|x, y| finite_measure_dist(x, y))?;
    }
    ok &= t.violations == 0;
    parts.push(format!("finite_measure_dist {} triples {} violations", t.triples, t.violations));

    // Atoms inside K_10 so that the ten summed levels separate distinct measures.
    let mut t = AxiomTally::default();
    for i in 0..1_000u64 {
        let m: Vec<LocallyFiniteMeasure> = measures(3, i, false, 10)
            .into_iter()
            .map(LocallyFiniteMeasure::from_finite)
            .collect();
        let lf_eq = |x: &LocallyFiniteMeasure, y: &LocallyFiniteMeasure| -> bool {
            x.truncate(10).ok() == y.truncate(10).ok()
        };
        let (ab, ba) = (vague_dist(&m[0], &m[1], DEFAULT_TOL)?.value, vague_dist(&m[1], &m[0], DEFAULT_TOL)?.value);
        let bc = vague_dist(&m[1], &m[2], DEFAULT_TOL)?.value;
        let ac = vague_dist(&m[0], &m[2], DEFAULT_TOL)?.value;
        let aa = vague_dist(&m[0], &m[0], DEFAULT_TOL)?.value;
        t.triples += 1;
        let excess = ac - ab - bc;
        t.worst_triangle_excess = t.worst_triangle_excess.max(excess);
        if (ab - ba).abs() > AXIOM_SLACK || aa.abs() > AXIOM_SLACK || excess > AXIOM_SLACK || (!lf_eq(&m[0], &m[1]) && ab <= 0.0)
        {
            t.violations += 1;
        }
    }
    ok &= t.violations == 0;
    parts.push(format!("vague_dist {} triples {} violations", t.triples, t.violations));

    Ok(CriterionResult::new(
        "C2",
        "metric axiom suites",
        ok,
        format!("{} (slack {AXIOM_SLACK:.0e})", parts.join("; ")),
    ))
}

fn boundedness_coincidence() -> Result<CriterionResult> {
    let root = StreamKey::new(SEED).child(3);
    let spaces = [GroundSpace::halfline(), GroundSpace::punctured(2, false)?];
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for (s, space) in spaces.iter().enumerate() {
        for m in 1..=10u32 {
            let mut rng = root.child(s as u64).child(m as u64).rng();
            let lo = 1.0 / m as f64;
            let pts: Vec<Point> = (0..400)
                .map(|i| {
                    let r = if i < 20 { lo * (1.0 + 1e-9 * (i + 1) as f64) } else { log_uniform(&mut rng, lo, 1e3 * m as f64) };
                    if space.dim() == 1 {
                        Point::scalar(r)
                    } else {
                        let a = std::f64::consts::TAU * rng.open01();
                        Point::new(vec![r * a.cos(), r * a.sin()])
                    }
                })
                .filter(|p| space.in_level(p, m))
                .collect();
            let mut diam: f64 = 0.0;
            for (i, x) in pts.iter().enumerate() {
                for y in &pts[i + 1..] {
                    diam = diam.max(space.hu_metric(x, y));
                }
            }
            let bound = (m as f64).max(1.0);
            worst_ratio = worst_ratio.max(diam / bound);
            ok &= diam.is_finite() && diam <= bound;
        }
    }
    let mut growth_ok = true;
    let mut last_growth = 0.0;
    for space in &spaces {
        let unit = |r: f64| {
            if space.dim() == 1 {
                Point::scalar(r)
            } else {
                Point::new(vec![r * 0.6, r * 0.8])
            }
        };
        let base = unit(1.0);
        let d: Vec<f64> = (1..=20).map(|k| space.hu_metric(&base, &unit(0.5f64.powi(k)))).collect();
        growth_ok &= d.windows(2).all(|w| w[1] > w[0]);
        growth_ok &= d[19] >= (1u64 << 20) as f64 - 1.0;
        last_growth = d[19];
    }
    Ok(CriterionResult::new(
        "C3",
        "boundedness coincidence",
        ok && growth_ok,
        format!(
            "halfline and punctured(2), m = 1..10: max diam(K_m)/max(1,m) = {worst_ratio:.6}; hu distance to 2^-k strictly increasing over 20 points, reaching {last_growth:.3e}"
        ),
    ))
}

fn criterion_equivalence() -> Result<CriterionResult> {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in &crate::convergence::CATALOGUE_NAMES[..8] {
        let e = catalogue_entry(name)?;
        let r = cross_validate(&e.sequence, &e.battery, &e.regions, &DEFAULT_GRID, DEFAULT_TOL)?;
        let fine = r.consistent && r.consensus == Some(e.expected);
        ok &= fine;
        let applicable = r.outcomes.iter().filter(|o| o.verdict.is_some()).count();
        lines.push(format!(
            "{name}={}({applicable}/4)",
            r.consensus.map(|t| t.to_string()).unwrap_or_else(|| "disagree".into())
        ));
    }
    let vanish = catalogue_entry("vanish_at_origin")?;
    let r = cross_validate(&vanish.sequence, &vanish.battery, &vanish.regions, &DEFAULT_GRID, DEFAULT_TOL)?;
    let all_four = r.outcomes.iter().all(|o| o.status() == Some(Tri::Pass));
    let weak_origin = catalogue_entry("weak_vanish_to_origin")?;
    let weak_null = catalogue_entry("weak_vanish_to_null")?;
    let to_origin = check_portmanteau(&weak_origin.sequence, &weak_origin.regions, &DEFAULT_GRID, DEFAULT_TOL)?.converged;
    let to_null = check_portmanteau(&weak_null.sequence, &weak_null.regions, &DEFAULT_GRID, DEFAULT_TOL)?.converged;
    ok &= all_four && to_origin == Tri::Pass && to_null == Tri::Fail;
    Ok(CriterionResult::new(
        "C4",
        "criterion equivalence",
        ok,
        format!(
            "{}; halfline delta_1/n -> null passes all four: {all_four}; weak(1) portmanteau: to delta_0 {to_origin}, to null {to_null}",
            lines.join(" ")
        ),
    ))
}

fn monotone_approximants() -> Result<CriterionResult> {
    let cases = [
        (GroundSpace::halfline(), Region::closed(1.0, 2.0), [1.0, 2.0], 0.0, 4.0),
        (GroundSpace::euclidean(1)?, Region::closed(-1.0, 0.5), [-1.0, 0.5], -3.0, 3.0),
    ];
    let ms: Vec<u32> = (0..=10).map(|k| 1u32 << k).collect();
    let mut violations = 0usize;
    let mut checked_far = 0usize;
    for (space, region, boundary, lo, hi) in &cases {
        let grid: Vec<Point> = (0..1000).map(|i| Point::scalar(lo + (hi - lo) * (i as f64 + 0.5) / 1000.0)).collect();
        let compiled = space.compile(region)?;
        let uppers: Vec<TestFunction> = ms.iter().map(|&m| TestFunction::upper_approx(*space, region.clone(), m)).collect::<Result<_>>()?;
        let lowers: Vec<TestFunction> = ms.iter().map(|&m| TestFunction::lower_approx(*space, region.clone(), m)).collect::<Result<_>>()?;
        for x in &grid {
            let ind = if compiled.contains(x) { 1.0 } else { 0.0 };
            let up: Vec<f64> = uppers.iter().map(|f| f.eval(x)).collect();
            let low: Vec<f64> = lowers.iter().map(|f| f.eval(x)).collect();
            for k in 0..ms.len() {
                if !(low[k] <= ind && ind <= up[k]) {
                    violations += 1;
                }
                if k > 0 && !(up[k] <= up[k - 1] && low[k] >= low[k - 1]) {
                    violations += 1;
                }
            }
            let to_boundary = boundary
                .iter()
                .map(|b| space.hu_metric(x, &Point::scalar(*b)))
                .fold(f64::INFINITY, f64::min);
            if to_boundary >= 0.1 {
                checked_far += 1;
                if up[ms.len() - 1] != ind || low[ms.len() - 1] != ind {
                    violations += 1;
                }
            }
        }
    }
    Ok(CriterionResult::new(
        "C5",
        "monotone approximants",
        violations == 0,
        format!(
            "2 regions x 1000 grid points, m = 1,2,..,1024: {violations} sandwich/monotonicity violations; gap at m = 1024 exactly 0 required on {checked_far} points at distance >= 0.1 from the boundary"
        ),
    ))
}

/// Mean and unbiased variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn poisson_sampler_statistics() -> Result<CriterionResult> {
    const SEEDS: u64 = 10_000;
    let root = StreamKey::new(SEED).child(6);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, &lambda) in [0.5, 1.0, 5.0].iter().enumerate() {
        // c = λ, α = 1 gives mass λ on K_1 and λ on the annulus (1/2, 1].
        let intensity = IntensityMeasure::new(lambda, 1.0)?;
        let mut outer = Vec::with_capacity(SEEDS as usize);
        let mut inner = Vec::with_capacity(SEEDS as usize);
        for s in 0..SEEDS {
            let seed = root.child(k as u64).child(s).rng().next_u64();
            let mu = sample_poisson(&intensity, 2, seed);
            let n1 = mu.atoms().iter().filter(|a| a.x.coords()[0] > 1.0).count() as f64;
            outer.push(n1);
            inner.push(mu.len() as f64 - n1);
        }
        let (mean, var) = mean_var(&outer);
        let (mean2, _) = mean_var(&inner);
        let cov = outer.iter().zip(&inner).map(|(a, b)| (a - mean) * (b - mean2)).sum::<f64>() / (SEEDS as f64 - 1.0);
        let mean_ok = (mean - lambda).abs() <= 4.0 * (lambda / SEEDS as f64).sqrt();
        let var_ok = (var - lambda).abs() <= 0.1 * lambda;
        let cov_bound = 4.0 * (lambda * lambda / SEEDS as f64).sqrt();
        let cov_ok = cov.abs() <= cov_bound;
        ok &= mean_ok && var_ok && cov_ok;
        parts.push(format!("lambda={lambda}: mean {mean:.4} var {var:.4} cov {cov:+.4} (|cov| <= {cov_bound:.4})"));
    }
    let intensity = IntensityMeasure::new(1.0, 1.0)?;
    let coupled = (0..100u64).all(|s| {
        sample_poisson(&intensity, 5, s).restrict_to_level(4) == sample_poisson(&intensity, 4, s)
            && sample_empirical_extremes(10_000, 1.0, 5, s).restrict_to_level(4) == sample_empirical_extremes(10_000, 1.0, 4, s)
    });
    let counts: Vec<f64> = (0..1000u64).map(|s| sample_empirical_extremes(10_000, 1.0, 1, s).len() as f64).collect();
    let (em, ev) = mean_var(&counts);
    let extremes_ok = (em - 1.0).abs() <= 3.0 * (ev / 1000.0).sqrt();
    ok &= coupled && extremes_ok;
    parts.push(format!("level coupling over 100 seeds: {coupled}; extremes n=1e4 mean count in K_1 {em:.4}"));
    Ok(CriterionResult::new("C6", "poisson sampler statistics", ok, parts.join("; ")))
}

fn poisson_target() -> RandomMeasureModel {
    RandomMeasureModel::poisson(IntensityMeasure::new(1.0, 1.0).expect("valid"))
}

fn laplace_mc_vs_quadrature() -> Result<CriterionResult> {
    let hl = GroundSpace::halfline();
    let battery = lipschitz_battery(hl, 10, 7)?;
    let target = poisson_target();
    let intensity = IntensityMeasure::new(1.0, 1.0)?;
    let est = laplace_mc_batch(&target, battery.members(), 10_000, SEED)?;
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for (f, e) in battery.members().iter().zip(&est) {
        let exact = laplace_poisson_exact(&intensity, f, DEFAULT_QUAD_TOL)?;
        let z = (e.estimate - exact).abs() / e.stderr;
        worst = worst.max(z);
        if z <= 3.0 {
            agree += 1;
        }
    }
    // Sandwich L(f⁺_m) ≤ L(1_B) ≤ L(f⁻_m) for B = [1, 2], with shrinking gaps.
    let b = Region::closed(1.0, 2.0);
    let indicator = (-(1.0 - (-1.0f64).exp()) * 0.5).exp();
    let mut gaps = Vec::new();
    let mut sandwich = true;
    for m in [1u32, 2, 4, 8, 16] {
        let up = laplace_poisson_exact(&intensity, &TestFunction::upper_approx(hl, b.clone(), m)?, SANDWICH_QUAD_TOL)?;
        let low = laplace_poisson_exact(&intensity, &TestFunction::lower_approx(hl, b.clone(), m)?, SANDWICH_QUAD_TOL)?;
        sandwich &= up <= indicator + SANDWICH_QUAD_TOL && indicator <= low + SANDWICH_QUAD_TOL;
        gaps.push(low - up);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let mc_single = laplace_mc(&target, &battery.members()[0], 10_000, SEED)?;
    let batch_consistent = mc_single == est[0];
    Ok(CriterionResult::new(
        "C7",
        "laplace mc vs quadrature",
        agree >= 9 && sandwich && shrinking && batch_consistent,
        format!(
            "{agree}/10 within 3 stderr at reps 1e4 (max |z| {worst:.2}); sandwich for [1,2] holds: {sandwich}, gaps {}",
            gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" > ")
        ),
    ))
}

fn tester_opts() -> TesterOptions {
    TesterOptions {
        n_grid: vec![100, 1_000, 10_000],
        reps: 10_000,
        seed: SEED,
        ..TesterOptions::default()
    }
}

/// Verdicts of the positive run and the two negative controls on a battery,
/// with the final max |z| of each.
pub fn distribution_verdicts(battery: &FunctionFamily) -> Result<[(Tri, f64); 3]> {
    let opts = tester_opts();
    let extremes = |n: u64| RandomMeasureModel::empirical_extremes(n, 1.0);
    let doubled = RandomMeasureModel::poisson(IntensityMeasure::new(2.0, 1.0)?);
    let last = |r: &crate::random_measures::LaplaceReport| (r.verdict, r.max_abs_z.last().map(|p| p.1).unwrap_or(f64::NAN));
    let positive = test_convergence_in_distribution(&extremes, &poisson_target(), battery, &opts)?;
    let wrong_target = test_convergence_in_distribution(&extremes, &doubled, battery, &opts)?;
    let wrong_seq = test_convergence_in_distribution(&|_| Ok(doubled.clone()), &poisson_target(), battery, &opts)?;
    Ok([last(&positive), last(&wrong_target), last(&wrong_seq)])
}

fn distribution_ok(v: &[(Tri, f64); 3]) -> bool {
    v[0].0 == Tri::Pass && v[0].1 <= 3.0 && v[1..].iter().all(|(t, z)| *t == Tri::Fail && *z > 5.0)
}

fn describe(v: &[(Tri, f64); 3]) -> String {
    format!(
        "extremes vs Poisson(c=1): {} (max |z| {:.2}); vs Poisson(c=2): {} (max |z| {:.1}); Poisson(c=2) vs Poisson(c=1): {} (max |z| {:.1})",
        v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1
    )
}

fn convergence_in_distribution() -> Result<CriterionResult> {
    let battery = lipschitz_battery(GroundSpace::halfline(), 8, SEED)?;
    let v = distribution_verdicts(&battery)?;
    Ok(CriterionResult::new(
        "C8",
        "convergence in distribution",
        distribution_ok(&v),
        format!("8 functions, n = 1e2,1e3,1e4, reps 1e4; {}", describe(&v)),
    ))
}

fn multiplicative_family_route() -> Result<CriterionResult> {
    let family = multiplicative_family(GroundSpace::halfline(), 4, SEED)?;
    let v = distribution_verdicts(&family)?;
    let lipschitz = distribution_verdicts(&lipschitz_battery(GroundSpace::halfline(), 8, SEED)?)?;
    let same = v.iter().zip(&lipschitz).all(|(a, b)| a.0 == b.0);
    Ok(CriterionResult::new(
        "C9",
        "multiplicative family route",
        distribution_ok(&v) && same,
        format!("{} members; {}; matches the Lipschitz battery verdicts: {same}", family.len(), describe(&v)),
    ))
}

fn bump_sandwich(corrupt: bool) -> Result<CriterionResult> {
    let root = StreamKey::new(SEED).child(10);
    let mut spaces = sample_spaces().to_vec();
    spaces.push(GroundSpace::punctured(1, true)?);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for (s, space) in spaces.iter().enumerate() {
        let mut rng = root.child(s as u64).rng();
        for m in 1..=8u32 {
            for _ in 0..500 {
                let x = random_point(space, &mut rng, 20);
                let h = space.bump(m, &x);
                let h = if corrupt { 0.999 * h } else { h };
                let lower = if space.in_level_closure(&x, m) { 1.0 } else { 0.0 };
                let upper = if space.in_level(&x, m + 1) { 1.0 } else { 0.0 };
                checked += 1;
                if !(lower <= h && h <= upper) {
                    violations += 1;
                }
            }
        }
    }
    Ok(CriterionResult::new(
        "bump",
        "bump sandwich",
        violations == 0,
        format!(
            "1 on closure of K_m <= h_m <= 1 on K_(m+1): {violations} violations in {checked} points{}",
            if corrupt { " (corrupted bump injected)" } else { "" }
        ),
    ))
}
