use vague_core::convergence::catalogue_entry;
use vague_core::metrics::{
    deficiency, finite_measure_dist, prohorov, prohorov_one_sided, prohorov_oracle, prohorov_report, vague_dist,
    PROHOROV_ATOM_CAP,
};
use vague_core::rng::StreamKey;
use vague_core::selftest::{random_measure, sample_spaces};
use vague_core::{DiscreteMeasure, Error, GroundSpace, LocallyFiniteMeasure, MetricChoice, Point};

fn line() -> GroundSpace {
    GroundSpace::euclidean(1).unwrap()
}

fn m(space: GroundSpace, atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_scalars(space, atoms).unwrap()
}

/// Largest μ(A) − ν(A^ε) over all subsets A of μ's atoms, by enumeration.
fn brute_deficiency(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64, metric: MetricChoice) -> f64 {
    let space = mu.space();
    let n = mu.len();
    (0u32..1 << n)
        .map(|mask| {
            let picked: Vec<&Point> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &mu.atoms()[i].x).collect();
            let a: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| mu.atoms()[i].w).sum();
            let thick: f64 = nu
                .atoms()
                .iter()
                .filter(|b| picked.iter().any(|x| space.distance(x, &b.x, metric) <= eps))
                .map(|b| b.w)
                .sum();
            a - thick
        })
        .fold(0.0, f64::max)
}

/// Two-sided definition: the smallest candidate ε at which both one-sided
/// conditions hold. The infimum is either a pairwise distance or a deficiency
/// value attained on the interval after one, so those are the candidates.
fn definitional_prohorov(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: MetricChoice) -> f64 {
    let space = mu.space();
    let mut dists: Vec<f64> = vec![0.0];
    for a in mu.atoms() {
        for b in nu.atoms() {
            dists.push(space.distance(&a.x, &b.x, metric));
        }
    }
    dists.sort_by(f64::total_cmp);
    dists.dedup();
    let worst: Vec<f64> = dists
        .iter()
        .map(|&d| brute_deficiency(mu, nu, d, metric).max(brute_deficiency(nu, mu, d, metric)))
        .collect();
    let feasible = |eps: f64| {
        let k = dists.iter().rposition(|&d| d <= eps).expect("0 is a breakpoint");
        worst[k] <= eps
    };
    let mut candidates: Vec<f64> = dists.iter().chain(&worst).copied().filter(|&e| e <= 1.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.into_iter().find(|&e| feasible(e)).unwrap_or(1.0)
}

#[test]
fn deficiency_examples() {
    let d0 = m(line(), &[(0.0, 1.0)]);
    let d1 = m(line(), &[(1.0, 1.0)]);
    assert_eq!(deficiency(&d0, &d1, 0.5, MetricChoice::Base).unwrap().deficiency_value, 1.0);
    assert_eq!(deficiency(&d0, &d1, 1.0, MetricChoice::Base).unwrap().deficiency_value, 0.0);
    let mu = m(line(), &[(0.0, 0.7), (2.0, 0.3)]);
    let c = deficiency(&mu, &d1, 1.0, MetricChoice::Base).unwrap();
    assert_eq!(c.deficiency_value, 0.0);
    assert_eq!(brute_deficiency(&mu, &d1, 1.0, MetricChoice::Base), 0.0);
}

#[test]
fn prohorov_examples() {
    let d0 = m(line(), &[(0.0, 1.0)]);
    let d3 = m(line(), &[(0.3, 1.0)]);
    assert_eq!(prohorov(&d0, &d3, MetricChoice::Base).unwrap(), 0.3);
    assert_eq!(prohorov_oracle(&d0, &d3, MetricChoice::Base).unwrap(), 0.3);
    assert_eq!(prohorov(&d0, &d0, MetricChoice::Hu).unwrap(), 0.0);
    assert_eq!(prohorov_oracle(&d0, &d0, MetricChoice::Hu).unwrap(), 0.0);
    let nu = m(line(), &[(0.0, 0.8), (10.0, 0.2)]);
    assert!((prohorov(&d0, &nu, MetricChoice::Base).unwrap() - 0.2).abs() < 1e-15);
    assert!((prohorov_oracle(&d0, &nu, MetricChoice::Base).unwrap() - 0.2).abs() < 1e-15);
    let far = m(line(), &[(5.0, 1.0)]);
    assert_eq!(prohorov(&d0, &far, MetricChoice::Base).unwrap(), 1.0);
}

#[test]
fn prohorov_rejects_bad_input() {
    let mu = m(line(), &[(0.0, 0.5)]);
    let nu = m(line(), &[(0.0, 1.0)]);
    assert!(matches!(prohorov(&mu, &nu, MetricChoice::Base), Err(Error::NotProbability(_))));
    assert!(matches!(
        prohorov(&nu, &m(GroundSpace::halfline(), &[(1.0, 1.0)]), MetricChoice::Base),
        Err(Error::SpaceMismatch { .. })
    ));
    let w = 1.0 / (PROHOROV_ATOM_CAP as f64 + 1.0);
    let big: Vec<(f64, f64)> = (0..=PROHOROV_ATOM_CAP).map(|i| (i as f64, w)).collect();
    assert!(matches!(
        prohorov(&m(line(), &big), &nu, MetricChoice::Base),
        Err(Error::SizeCap { .. })
    ));
    let oracle_big: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 0.05)).collect();
    assert!(matches!(
        prohorov_oracle(&m(line(), &oracle_big), &nu, MetricChoice::Base),
        Err(Error::SizeCap { .. })
    ));
}

#[test]
fn seeded_five_atom_pair() {
    let space = GroundSpace::halfline();
    let mu = random_measure(&space, StreamKey::new(42).child(0), 5, true, 10, None);
    let nu = random_measure(&space, StreamKey::new(42).child(1), 5, true, 10, Some(&mu));
    let exact = prohorov(&mu, &nu, MetricChoice::Hu).unwrap();
    assert!((exact - prohorov_oracle(&mu, &nu, MetricChoice::Hu).unwrap()).abs() <= 1e-12);
    assert!((exact - definitional_prohorov(&mu, &nu, MetricChoice::Hu)).abs() <= 1e-12);
}

#[test]
fn prohorov_matches_definition_and_is_symmetric() {
    let spaces = sample_spaces();
    for i in 0..200u64 {
        let space = spaces[i as usize % 4];
        let metric = if i % 2 == 0 { MetricChoice::Hu } else { MetricChoice::Base };
        let key = StreamKey::new(9).child(i);
        let mu = random_measure(&space, key.child(0), 10, true, 20, None);
        let nu = random_measure(&space, key.child(1), 10, true, 20, Some(&mu));
        let forward = prohorov_one_sided(&mu, &nu, metric).unwrap().value;
        let backward = prohorov_one_sided(&nu, &mu, metric).unwrap().value;
        assert!((forward - backward).abs() <= 1e-12, "instance {i}: {forward} vs {backward}");
        assert_eq!(prohorov(&mu, &nu, metric).unwrap(), prohorov(&nu, &mu, metric).unwrap());
        if mu.len() <= 7 && nu.len() <= 7 {
            let def = definitional_prohorov(&mu, &nu, metric);
            assert!((forward - def).abs() <= 1e-12, "instance {i}: {forward} vs definition {def}");
        }
    }
}

#[test]
fn certificates_are_consistent_and_deficiency_is_monotone() {
    let spaces = sample_spaces();
    for i in 0..100u64 {
        let space = spaces[i as usize % 4];
        let key = StreamKey::new(10).child(i);
        let mu = random_measure(&space, key.child(0), 8, false, 20, None);
        let nu = random_measure(&space, key.child(1), 8, false, 20, Some(&mu));
        let mut last = f64::INFINITY;
        for k in 0..=40 {
            let eps = k as f64 * 0.1;
            let c = deficiency(&mu, &nu, eps, MetricChoice::Hu).unwrap();
            assert!((c.deficiency_value - c.recompute(&mu, &nu, MetricChoice::Hu)).abs() <= 1e-12);
            assert!((c.deficiency_value - (mu.total_mass() - c.flow_value)).abs() <= 1e-12);
            assert!((c.deficiency_value - brute_deficiency(&mu, &nu, eps, MetricChoice::Hu)).abs() <= 1e-12);
            assert!(c.deficiency_value <= last + 1e-12);
            last = c.deficiency_value;
        }
    }
}

#[test]
fn prohorov_report_brackets_the_value() {
    let space = GroundSpace::halfline();
    let mu = random_measure(&space, StreamKey::new(1), 6, true, 10, None);
    let nu = random_measure(&space, StreamKey::new(2), 6, true, 10, None);
    let r = prohorov_report(&mu, &nu, MetricChoice::Hu).unwrap();
    assert!(r.feasible.deficiency_value <= r.feasible.epsilon.max(r.value) + 1e-12);
    if let Some(inf) = &r.infeasible {
        assert!(inf.epsilon < r.value);
    }
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("witness_set"));
}

#[test]
fn finite_measure_dist_examples() {
    let x = m(line(), &[(0.5, 2.0)]);
    let y = m(line(), &[(0.5, 1.0)]);
    assert_eq!(finite_measure_dist(&x, &y).unwrap(), 1.0);
    assert_eq!(finite_measure_dist(&x, &x).unwrap(), 0.0);
    let d0 = m(line(), &[(0.0, 1.0)]);
    assert_eq!(finite_measure_dist(&d0, &DiscreteMeasure::zero(line())).unwrap(), 1.0);
    assert_eq!(
        finite_measure_dist(&DiscreteMeasure::zero(line()), &DiscreteMeasure::zero(line())).unwrap(),
        0.0
    );
}

#[test]
fn vague_dist_examples() {
    let hl = GroundSpace::halfline();
    let d2 = LocallyFiniteMeasure::from_finite(m(hl, &[(2.0, 1.0)]));
    let null = LocallyFiniteMeasure::from_finite(DiscreteMeasure::zero(hl));
    let tol = 0.5f64.powi(20);
    let v = vague_dist(&d2, &null, tol).unwrap();
    assert!((v.value - (1.0 - tol)).abs() < 1e-15);
    assert!(v.error_bound <= tol);
    assert_eq!(vague_dist(&d2, &d2, tol).unwrap().value, 0.0);
    let far = LocallyFiniteMeasure::from_finite(m(hl, &[(0.001, 50.0), (7.0, 3.0)]));
    assert!(vague_dist(&far, &null, 1e-6).unwrap().value <= 1.0);
    assert!(vague_dist(&d2, &null, 0.0).is_err());
}

#[test]
fn vague_dist_separates_catalogue_entries_at_large_n() {
    let n = 1_000_000;
    for (name, converges) in [
        ("delta_shift", true),
        ("vanish_at_origin", true),
        ("mass_ramp", true),
        ("lattice_shift", true),
        ("escape", false),
        ("wrong_limit", false),
        ("oscillating", false),
        ("mass_blowup", false),
    ] {
        let e = catalogue_entry(name).unwrap();
        let v = vague_dist(&e.sequence.term(n).unwrap(), e.sequence.limit(), 1e-3).unwrap();
        if converges {
            assert!(v.value <= 1e-5, "{name}: {}", v.value);
        } else {
            assert!(v.value >= 0.1, "{name}: {}", v.value);
        }
    }
}
