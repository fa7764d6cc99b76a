use proptest::prelude::*;
use vague_core::rng::StreamKey;
use vague_core::selftest::{random_point, sample_spaces};
use vague_core::{Error, GroundSpace, MetricChoice, Point, Region, SpaceKind};

fn p(x: f64) -> Point {
    Point::scalar(x)
}

#[test]
fn is_bounded_examples() {
    let punctured = GroundSpace::punctured(1, false).unwrap();
    // [1,2] ⊆ K_m = {|x| > 1/m} first holds at m = 2.
    assert_eq!(punctured.is_bounded(&Region::closed(1.0, 2.0)).unwrap(), Some(2));
    let hl = GroundSpace::halfline();
    assert_eq!(hl.is_bounded(&Region::interval(0.0, 1.0, true, false)).unwrap(), None);
    let weak = GroundSpace::weak(1).unwrap();
    assert_eq!(weak.is_bounded(&Region::Whole).unwrap(), Some(1));
    let line = GroundSpace::euclidean(1).unwrap();
    assert_eq!(line.is_bounded(&Region::Whole).unwrap(), None);
    assert_eq!(line.is_bounded(&Region::closed(-2.5, 1.0)).unwrap(), Some(3));
}

#[test]
fn localizing_set_examples() {
    let hl = GroundSpace::halfline();
    let k3 = hl.localizing_set(3);
    assert!(!hl.region_contains(&k3, &p(1.0 / 3.0)));
    assert!(hl.region_contains(&k3, &p(1.0 / 3.0 + 1e-12)));
    assert!(hl.region_contains(&k3, &p(1e300)));

    let plane = GroundSpace::euclidean(2).unwrap();
    assert_eq!(plane.localizing_set(5), Region::ball(vec![0.0, 0.0], 5.0, true));

    let weak = GroundSpace::weak(1).unwrap();
    assert_eq!(weak.localizing_set(7), Region::Whole);

    let capped = GroundSpace::punctured(2, true).unwrap();
    let k2 = capped.localizing_set(2);
    assert!(capped.region_contains(&k2, &Point::new(vec![1.0, 1.0])));
    assert!(!capped.region_contains(&k2, &Point::new(vec![2.0, 0.0])));
}

#[test]
fn localizing_sets_match_levels_on_samples() {
    let mut spaces = sample_spaces().to_vec();
    spaces.push(GroundSpace::punctured(1, true).unwrap());
    for (s, space) in spaces.iter().enumerate() {
        let mut rng = StreamKey::new(3).child(s as u64).rng();
        for _ in 0..300 {
            let x = random_point(space, &mut rng, 30);
            for m in 1..=10 {
                assert_eq!(space.region_contains(&space.localizing_set(m), &x), space.in_level(&x, m));
                if space.in_level(&x, m) {
                    assert!(space.in_level(&x, m + 1));
                }
            }
        }
    }
}

#[test]
fn hu_metric_examples() {
    let hl = GroundSpace::halfline();
    assert_eq!(hl.hu_metric(&p(1.0), &p(2.0)), 1.0);
    assert_eq!(hl.hu_metric(&p(0.1), &p(0.2)), 5.0);
    for space in sample_spaces() {
        let x = Point::new(vec![0.5; space.dim()]);
        assert_eq!(space.hu_metric(&x, &x), 0.0);
    }
    let weak = GroundSpace::weak(1).unwrap();
    assert_eq!(weak.hu_metric(&p(0.0), &p(5.0)), 1.0);
    let line = GroundSpace::euclidean(1).unwrap();
    assert_eq!(line.hu_metric(&p(0.0), &p(5.0)), 5.0);
}

#[test]
fn bump_examples() {
    let hl = GroundSpace::halfline();
    assert_eq!(hl.bump(1, &p(2.0)), 1.0);
    assert_eq!(hl.bump(1, &p(0.4)), 0.0);
    assert!((hl.bump(1, &p(2.0 / 3.0)) - 0.5).abs() < 1e-15);
}

#[test]
fn bump_sandwich_on_samples() {
    let mut spaces = sample_spaces().to_vec();
    spaces.push(GroundSpace::punctured(2, true).unwrap());
    for (s, space) in spaces.iter().enumerate() {
        let mut rng = StreamKey::new(11).child(s as u64).rng();
        for _ in 0..1000 {
            let x = random_point(space, &mut rng, 30);
            for m in 1..=12 {
                let g = space.bump(m, &x);
                let lower = if space.in_level_closure(&x, m) { 1.0 } else { 0.0 };
                let upper = if space.in_level(&x, m + 1) { 1.0 } else { 0.0 };
                assert!(lower <= g && g <= upper, "{space} m={m} x={x} g={g}");
            }
        }
    }
}

#[test]
fn region_distance_examples() {
    let line = GroundSpace::euclidean(1).unwrap();
    let b = Region::closed(1.0, 2.0);
    assert_eq!(line.region_distance(&p(3.0), &b, MetricChoice::Base).unwrap(), 1.0);
    assert_eq!(line.region_distance(&p(1.5), &b, MetricChoice::Base).unwrap(), 0.0);
    let hl = GroundSpace::halfline();
    assert_eq!(hl.region_distance(&p(2.0), &Region::closed(4.0, 5.0), MetricChoice::Hu).unwrap(), 1.0);
    assert!(matches!(
        line.region_distance(&p(0.0), &Region::open(1.0, 1.0), MetricChoice::Base),
        Err(Error::EmptyRegion)
    ));
}

/// Brute-force infimum of the Hu metric over a fine grid of the region.
fn grid_distance(space: &GroundSpace, x: &Point, lo: f64, hi: f64) -> f64 {
    (0..=20_000)
        .map(|i| lo + (hi - lo) * i as f64 / 20_000.0)
        .map(|y| space.hu_metric(x, &p(y)))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn hu_region_distance_matches_grid_search() {
    let hl = GroundSpace::halfline();
    let mut rng = StreamKey::new(5).rng();
    for _ in 0..200 {
        let a = 0.05 + 3.0 * rng.open01();
        let b = a + 2.0 * rng.open01();
        let x = p(0.02 + 6.0 * rng.open01());
        let exact = hl.region_distance(&x, &Region::closed(a, b), MetricChoice::Hu).unwrap();
        let grid = grid_distance(&hl, &x, a, b);
        assert!(exact <= grid + 1e-12, "exact {exact} above grid {grid}");
        // The grid step bounds how far the grid minimum can be above the infimum.
        let step_bound = (b - a) / 20_000.0 * (1.0 + 1.0 / (a * a));
        assert!(grid - exact <= step_bound + 1e-12, "exact {exact} grid {grid}");
    }
}

#[test]
fn diameter_of_levels_is_bounded() {
    let hl = GroundSpace::halfline();
    for m in 1..=10u32 {
        let mut rng = StreamKey::new(8).child(m as u64).rng();
        let pts: Vec<Point> = (0..1000)
            .map(|_| p((1.0 / m as f64) * (1.0 + 1e4 * rng.open01().powi(4))))
            .filter(|x| hl.in_level(x, m))
            .collect();
        let mut diam: f64 = 0.0;
        for (i, x) in pts.iter().enumerate() {
            for y in &pts[i + 1..] {
                diam = diam.max(hl.hu_metric(x, y));
            }
        }
        // On K_m = (1/m, ∞), |1/x − 1/y| < m and d' ∧ 1 ≤ 1.
        assert!(diam <= (m as f64).max(1.0), "m={m} diam={diam}");
    }
}

#[test]
fn distance_to_forbidden_set_grows_without_bound() {
    for space in [GroundSpace::halfline(), GroundSpace::punctured(2, false).unwrap()] {
        let at = |r: f64| {
            if space.dim() == 1 {
                p(r)
            } else {
                Point::new(vec![0.0, r])
            }
        };
        let x0 = at(0.5);
        let d: Vec<f64> = (3..=40).map(|j| space.hu_metric(&x0, &at(1.0 / j as f64))).collect();
        assert!(d.windows(2).all(|w| w[1] > w[0]));
        assert!((d.last().unwrap() - 38.0).abs() < 1e-9);
    }
}

#[test]
fn topological_equivalence_on_convergent_sequences() {
    let mut spaces = sample_spaces().to_vec();
    spaces.push(GroundSpace::punctured(1, false).unwrap());
    for (s, space) in spaces.iter().enumerate() {
        let mut rng = StreamKey::new(13).child(s as u64).rng();
        for _ in 0..100 {
            let x = random_point(space, &mut rng, 20);
            let dir: Vec<f64> = (0..space.dim()).map(|_| rng.open01() - 0.5).collect();
            let scale = 0.5 * space.forbidden_set_dist(&x).min(1.0);
            let d: Vec<f64> = (1..=30)
                .map(|j| {
                    let t = scale * 0.5f64.powi(j);
                    let xj = Point::new(x.coords().iter().zip(&dir).map(|(a, b)| a + t * b).collect());
                    space.hu_metric(&xj, &x)
                })
                .collect();
            assert!(*d.last().unwrap() < 1e-6, "{space} {x}: {:?}", d.last());
        }
    }
}

#[test]
fn invalid_points_are_rejected() {
    let hl = GroundSpace::halfline();
    assert!(matches!(hl.point(vec![0.0]), Err(Error::InvalidPoint { .. })));
    assert!(hl.point(vec![-1.0]).is_err());
    let punctured = GroundSpace::punctured(2, false).unwrap();
    assert!(punctured.point(vec![0.0, 0.0]).is_err());
    assert!(punctured.point(vec![1.0]).is_err());
}

#[test]
fn descriptors_round_trip() {
    let hl: GroundSpace = serde_json::from_str(r#"{"kind":"halfline_hl"}"#).unwrap();
    assert_eq!(hl, GroundSpace::halfline());
    let p2: GroundSpace = serde_json::from_str(r#"{"kind":"punctured","dim":2,"cap":false}"#).unwrap();
    assert_eq!(p2, GroundSpace::punctured(2, false).unwrap());
    let e3: GroundSpace = serde_json::from_str(r#"{"kind":"euclidean","dim":3}"#).unwrap();
    assert_eq!(e3, GroundSpace::euclidean(3).unwrap());
    let r: Region = serde_json::from_str(
        r#"{"type":"union","parts":[{"type":"interval","lo":1.0,"hi":2.0,"lo_open":false,"hi_open":false},{"type":"annulus","lo":0.5,"hi":2.0}]}"#,
    )
    .unwrap();
    assert_eq!(serde_json::from_str::<Region>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
    let ball: Region = serde_json::from_str(r#"{"type":"ball","center":[0,0],"radius":1.0,"open":true}"#).unwrap();
    assert_eq!(ball, Region::ball(vec![0.0, 0.0], 1.0, true));
    assert!(serde_json::from_str::<GroundSpace>(r#"{"kind":"euclidean","dim":0}"#).is_err());
}

fn space_strategy() -> impl Strategy<Value = GroundSpace> {
    prop_oneof![
        (1usize..=3).prop_map(|d| GroundSpace::euclidean(d).unwrap()),
        (1usize..=3).prop_map(|d| GroundSpace::weak(d).unwrap()),
        (1usize..=3, any::<bool>()).prop_map(|(d, c)| GroundSpace::punctured(d, c).unwrap()),
        Just(GroundSpace::halfline()),
    ]
}

fn points(space: GroundSpace, count: usize) -> impl Strategy<Value = Vec<Point>> {
    let coord = if space.kind() == SpaceKind::HalflineHl {
        (1e-3f64..50.0).boxed()
    } else {
        (-50.0f64..50.0).boxed()
    };
    proptest::collection::vec(proptest::collection::vec(coord, space.dim()), count)
        .prop_map(|v| v.into_iter().map(Point::new).collect::<Vec<_>>())
        .prop_filter("points must lie in X", move |v| v.iter().all(|x| space.check_point(x).is_ok()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn hu_metric_axioms((space, pts) in space_strategy().prop_flat_map(|s| (Just(s), points(s, 3)))) {
        let (x, y, z) = (&pts[0], &pts[1], &pts[2]);
        let d = |a: &Point, b: &Point| space.hu_metric(a, b);
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert_eq!(d(x, x), 0.0);
        prop_assert_eq!(d(x, y) == 0.0, x == y);
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    }

    #[test]
    fn region_distance_zero_iff_in_closure(
        lo in 0.01f64..5.0, len in 0.0f64..5.0, x in 0.001f64..12.0, open in any::<bool>()
    ) {
        let hl = GroundSpace::halfline();
        let region = Region::interval(lo, lo + len, open, open);
        prop_assume!(!hl.region_is_empty(&region).unwrap());
        let in_closure = x >= lo && x <= lo + len;
        for metric in [MetricChoice::Base, MetricChoice::Hu] {
            let d = hl.region_distance(&p(x), &region, metric).unwrap();
            prop_assert_eq!(d == 0.0, in_closure);
        }
    }
}
