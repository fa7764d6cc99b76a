use proptest::prelude::*;
use vague_core::rng::StreamKey;
use vague_core::selftest::{random_measure, sample_spaces};
use vague_core::{DiscreteMeasure, Error, GroundSpace, LocallyFiniteMeasure, Point, Region, TestFunction};

fn line() -> GroundSpace {
    GroundSpace::euclidean(1).unwrap()
}

fn m(space: GroundSpace, atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_scalars(space, atoms).unwrap()
}

#[test]
fn restrict_examples() {
    let mu = m(line(), &[(1.0, 1.0), (3.0, 1.0)]);
    assert_eq!(mu.restrict(&Region::closed(0.0, 2.0)).unwrap(), m(line(), &[(1.0, 1.0)]));
    let two = m(line(), &[(1.0, 2.0)]);
    assert!(two.restrict(&Region::interval(1.0, 2.0, true, false)).unwrap().is_empty());
    let hl = GroundSpace::halfline();
    let mu = m(hl, &[(0.1, 1.0), (0.9, 1.0)]);
    assert_eq!(mu.restrict(&hl.localizing_set(2)).unwrap(), m(hl, &[(0.9, 1.0)]));
    assert_eq!(mu.restrict_to_level(2), m(hl, &[(0.9, 1.0)]));
}

#[test]
fn integrate_examples() {
    let mu = m(line(), &[(1.0, 1.0), (3.0, 1.0)]);
    assert_eq!(mu.integrate(|_| 1.0), 2.0);
    let half = m(line(), &[(2.0, 0.5)]);
    assert_eq!(half.integrate(|x| x.coords()[0]), 1.0);
    let two = m(line(), &[(1.0, 1.0), (2.0, 1.0)]);
    let f = TestFunction::upper_approx(line(), Region::closed(1.0, 2.0), 2).unwrap();
    assert_eq!(f.integrate(&two).unwrap(), 2.0);
}

#[test]
fn mass_examples() {
    let b = Region::closed(1.0, 2.0);
    let mu = m(line(), &[(1.0, 1.0), (3.0, 1.0)]);
    assert_eq!((mu.mass(&b).unwrap(), mu.boundary_mass(&b).unwrap()), (1.0, 1.0));
    let mu = m(line(), &[(1.5, 1.0)]);
    assert_eq!((mu.mass(&b).unwrap(), mu.boundary_mass(&b).unwrap()), (1.0, 0.0));
    let mu = m(line(), &[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]);
    let b = Region::interval(1.0, 3.0, true, false);
    // ∂(1,3] = {1, 3} carries both end atoms.
    assert_eq!(mu.mass(&b).unwrap(), 2.0);
    assert_eq!(mu.boundary_mass(&b).unwrap(), 2.0);
}

#[test]
fn truncate_examples() {
    let hl = GroundSpace::halfline();
    let inside = LocallyFiniteMeasure::from_finite(m(hl, &[(1.5, 2.0), (4.0, 1.0)]));
    assert_eq!(inside.truncate(1).unwrap(), m(hl, &[(1.5, 2.0), (4.0, 1.0)]));
    let outside = LocallyFiniteMeasure::from_finite(m(hl, &[(0.4, 1.0)]));
    assert!(outside.truncate(1).unwrap().is_empty());
    let ramp = LocallyFiniteMeasure::from_finite(m(hl, &[(2.0 / 3.0, 1.0)]));
    let t = ramp.truncate(1).unwrap();
    assert_eq!(t.len(), 1);
    assert!((t.total_mass() - 0.5).abs() < 1e-15);
}

#[test]
fn add_and_scale_examples() {
    let d1 = m(line(), &[(1.0, 1.0)]);
    assert_eq!(d1.add(&d1).unwrap(), m(line(), &[(1.0, 2.0)]));
    assert!(m(line(), &[(1.0, 1.0), (2.0, 1.0)]).scale(0.0).unwrap().is_empty());
    let sum = m(line(), &[(1.0, 2.0)]).add(&m(line(), &[(2.0, 3.0)])).unwrap();
    assert_eq!(sum, m(line(), &[(1.0, 2.0), (2.0, 3.0)]));
    let other = m(GroundSpace::halfline(), &[(1.0, 1.0)]);
    assert!(matches!(d1.add(&other), Err(Error::SpaceMismatch { .. })));
    assert!(d1.scale(-1.0).is_err());
}

#[test]
fn construction_validates_and_merges() {
    assert!(matches!(
        DiscreteMeasure::from_scalars(line(), &[(1.0, 0.0)]),
        Err(Error::InvalidWeight(_))
    ));
    assert!(DiscreteMeasure::from_scalars(GroundSpace::halfline(), &[(-1.0, 1.0)]).is_err());
    let merged = m(line(), &[(2.0, 1.0), (1.0, 0.5), (2.0, 0.25)]);
    assert_eq!(merged.len(), 2);
    assert_eq!(merged.atoms()[1].w, 1.25);
}

#[test]
fn measure_files() {
    let json = r#"{"space":{"kind":"halfline_hl"},"atoms":[{"x":[1.0],"w":1.0},{"x":[2.0],"w":1.0}],"point_measure":true}"#;
    let mu: DiscreteMeasure = serde_json::from_str(json).unwrap();
    assert!(mu.is_point_measure());
    assert_eq!(mu.total_mass(), 2.0);
    let bad = r#"{"space":{"kind":"halfline_hl"},"atoms":[{"x":[1.0],"w":0.5}],"point_measure":true}"#;
    assert!(serde_json::from_str::<DiscreteMeasure>(bad).is_err());
    let unknown = r#"{"space":{"kind":"halfline_hl"},"atoms":[],"extra":1}"#;
    assert!(serde_json::from_str::<DiscreteMeasure>(unknown).is_err());
    let back: DiscreteMeasure = serde_json::from_str(&serde_json::to_string(&mu).unwrap()).unwrap();
    assert_eq!(back, mu);
}

/// Seeded locally finite measure: level m holds the atoms of a fixed seeded
/// cloud that fall in K_m.
fn seeded_lf(space: GroundSpace, seed: u64) -> LocallyFiniteMeasure {
    let cloud = random_measure(&space, StreamKey::new(seed), 40, false, 12, None);
    LocallyFiniteMeasure::from_generator(space, Some(12), move |m| Ok(cloud.restrict_to_level(m)))
}

#[test]
fn restriction_consistency() {
    for (s, space) in sample_spaces().into_iter().enumerate() {
        for seed in 0..25u64 {
            let mu = seeded_lf(space, 100 * s as u64 + seed);
            for lvl in 1..=10 {
                assert_eq!(mu.level(lvl + 2).unwrap().restrict_to_level(lvl), *mu.level(lvl).unwrap());
            }
            assert!(mu.is_consistent(1, 12).unwrap());
        }
    }
}

#[test]
fn truncate_mass_bound() {
    for (s, space) in sample_spaces().into_iter().enumerate() {
        for seed in 0..25u64 {
            let mu = seeded_lf(space, 7 + 100 * s as u64 + seed);
            for lvl in 1..=11 {
                let t = mu.truncate(lvl).unwrap();
                let upper = mu.level(lvl + 1).unwrap().total_mass();
                assert!(t.total_mass() <= upper + 1e-12);
                assert!(t.atoms().iter().all(|a| space.in_level(&a.x, lvl + 1)));
            }
        }
    }
}

#[test]
fn inconsistent_generator_is_rejected() {
    let hl = GroundSpace::halfline();
    let bad = LocallyFiniteMeasure::from_generator(hl, None, move |_| DiscreteMeasure::from_scalars(hl, &[(0.01, 1.0)]));
    assert!(matches!(bad.level(1), Err(Error::Materialization { .. })));
    let capped = LocallyFiniteMeasure::from_generator(hl, Some(3), move |m| Ok(DiscreteMeasure::zero(hl).restrict_to_level(m)));
    assert!(capped.level(4).is_err());
}

#[test]
fn concurrent_materialization_is_idempotent() {
    use rayon::prelude::*;
    let mu = seeded_lf(GroundSpace::halfline(), 5);
    let levels: Vec<DiscreteMeasure> = (0..64).into_par_iter().map(|i| (*mu.level(1 + i % 12).unwrap()).clone()).collect();
    for (i, l) in levels.iter().enumerate() {
        assert_eq!(*l, *mu.level(1 + i as u32 % 12).unwrap());
    }
}

fn atoms_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-20.0f64..20.0, 0.01f64..5.0), 0..12)
}

proptest! {
    #[test]
    fn integrate_is_linear(a in atoms_strategy(), b in atoms_strategy(), c in 0.0f64..10.0, lo in -10.0f64..10.0, len in 0.0f64..8.0) {
        let (mu, nu) = (m(line(), &a), m(line(), &b));
        let f = TestFunction::upper_approx(line(), Region::closed(lo, lo + len), 2).unwrap();
        let sum = f.integrate(&mu.add(&nu).unwrap()).unwrap();
        let parts = f.integrate(&mu).unwrap() + f.integrate(&nu).unwrap();
        prop_assert!((sum - parts).abs() <= 1e-12 * (1.0 + parts.abs()));
        let scaled = f.integrate(&mu.scale(c).unwrap()).unwrap();
        prop_assert!((scaled - c * f.integrate(&mu).unwrap()).abs() <= 1e-12 * (1.0 + scaled.abs()));
    }

    #[test]
    fn mass_is_additive_on_disjoint_regions(a in atoms_strategy(), cut in -10.0f64..10.0, lo in -30.0f64..-10.0, hi in 10.0f64..30.0) {
        let mu = m(line(), &a);
        let left = Region::interval(lo, cut, false, true);
        let right = Region::closed(cut, hi);
        let whole = Region::closed(lo, hi);
        prop_assert_eq!(mu.restrict(&left).unwrap().add(&mu.restrict(&right).unwrap()).unwrap(), mu.restrict(&whole).unwrap());
        let total = mu.mass(&left).unwrap() + mu.mass(&right).unwrap();
        prop_assert!((total - mu.mass(&whole).unwrap()).abs() <= 1e-12 * (1.0 + total));
    }

    #[test]
    fn points_round_trip(x in proptest::collection::vec(-1e6f64..1e6, 1..4)) {
        let p = Point::new(x);
        let back: Point = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}
