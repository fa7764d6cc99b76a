use vague_core::convergence::Tri;
use vague_core::random_measures::{
    laplace_mc, laplace_mc_batch, laplace_poisson_exact, sample_empirical_extremes, sample_poisson,
    test_convergence_in_distribution, IntensityMeasure, ModelSpec, RandomMeasureModel, TesterOptions, CAVEAT,
    DEFAULT_QUAD_TOL,
};
use vague_core::test_functions::lipschitz_battery;
use vague_core::{DiscreteMeasure, Error, GroundSpace, Point, Region, TestFunction};

fn hl() -> GroundSpace {
    GroundSpace::halfline()
}

fn unit() -> IntensityMeasure {
    IntensityMeasure::new(1.0, 1.0).unwrap()
}

/// ∫_a^b (1 − e^{−f(x)}) c x^{−α−1} dx by the composite trapezoid rule in x.
fn trapezoid_exponent(f: &TestFunction, c: f64, alpha: f64, a: f64, b: f64, steps: usize) -> f64 {
    let g = |x: f64| (1.0 - (-f.eval(&Point::scalar(x))).exp()) * c * x.powf(-alpha - 1.0);
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| g(a + h * i as f64)).sum();
    h * (0.5 * (g(a) + g(b)) + inner)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn poisson_count_examples() {
    let counts: Vec<f64> = (0..10_000u64).map(|s| sample_poisson(&unit(), 1, s).len() as f64).collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 1.0).abs() <= 4.0 * se, "mean {mean}");
    assert_eq!(sample_poisson(&unit(), 3, 9), sample_poisson(&unit(), 3, 9));
    assert!(IntensityMeasure::new(0.0, 1.0).is_err());
    assert_eq!(unit().level_mass(1), 1.0);
    assert!(unit().level_mass(3) < unit().level_mass(4));
}

#[test]
fn poisson_locations_follow_the_intensity() {
    // For α = 1, P(X ≤ 2 | X > 1) = 1/2 and P(X ≤ 1/2 | X ∈ K_4) = λ((1/4, 1/2]) / λ(K_4) = 2/4.
    let (mut low, mut total, mut deep, mut all) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..5_000u64 {
        let mu = sample_poisson(&unit(), 4, s);
        for a in mu.atoms() {
            let x = a.x.coords()[0];
            all += 1.0;
            if x <= 0.5 {
                deep += 1.0;
            }
            if x > 1.0 {
                total += 1.0;
                if x <= 2.0 {
                    low += 1.0;
                }
            }
        }
    }
    let p1 = low / total;
    assert!((p1 - 0.5).abs() <= 4.0 * (0.25 / total).sqrt(), "{p1}");
    let p2 = deep / all;
    assert!((p2 - 0.5).abs() <= 4.0 * (0.25 / all).sqrt(), "{p2}");
}

#[test]
fn extremes_count_examples() {
    for (alpha, m) in [(1.0, 1u32), (1.0, 3), (2.0, 2)] {
        let counts: Vec<f64> = (0..2_000u64).map(|s| sample_empirical_extremes(10_000, alpha, m, s).len() as f64).collect();
        let (mean, se) = mean_and_se(&counts);
        let expected = (m as f64).powf(alpha);
        assert!((mean - expected).abs() <= 4.0 * se, "alpha {alpha} m {m}: {mean}");
    }
    for s in 0..200 {
        assert!(sample_empirical_extremes(1, 1.0, 1, s).len() <= 1);
    }
    // n^{1/α} < m: every point lands in K_m.
    assert_eq!(sample_empirical_extremes(5, 1.0, 10, 3).total_mass(), 5.0);
}

#[test]
fn level_coupling() {
    let model = RandomMeasureModel::empirical_extremes(1_000, 1.5).unwrap();
    let poisson = RandomMeasureModel::poisson(IntensityMeasure::new(3.0, 0.7).unwrap());
    for s in 0..100 {
        for m in 1..=6 {
            assert_eq!(model.sample(m + 1, s).unwrap().restrict_to_level(m), model.sample(m, s).unwrap());
            assert_eq!(poisson.sample(m + 1, s).unwrap().restrict_to_level(m), poisson.sample(m, s).unwrap());
        }
    }
    let lf = poisson.realization(4);
    assert!(lf.is_consistent(1, 8).unwrap());
}

#[test]
fn laplace_mc_examples() {
    let zero = TestFunction::zero(hl());
    let model = RandomMeasureModel::poisson(unit());
    let e = laplace_mc(&model, &zero, 100, 3).unwrap();
    assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
    let fixed = RandomMeasureModel::fixed(DiscreteMeasure::from_scalars(hl(), &[(2.0, 1.0)]).unwrap());
    let f = TestFunction::lower_approx(hl(), Region::closed(1.0, 4.0), 4).unwrap();
    assert_eq!(f.eval(&Point::scalar(2.0)), 1.0);
    let e = laplace_mc(&fixed, &f, 100, 3).unwrap();
    assert!((e.estimate - (-1.0f64).exp()).abs() < 1e-15 && e.stderr < 1e-15);
    assert!(laplace_mc(&model, &zero, 99, 3).is_err());
    let g = TestFunction::lower_approx(hl(), Region::closed(2.0, 3.0), 1).unwrap();
    let e = laplace_mc(&model, &g, 10_000, 5).unwrap();
    let exact = laplace_poisson_exact(&unit(), &g, DEFAULT_QUAD_TOL).unwrap();
    assert!((e.estimate - exact).abs() <= 3.0 * e.stderr, "{} vs {exact}", e.estimate);
}

#[test]
fn laplace_exact_matches_independent_quadrature() {
    let battery = lipschitz_battery(hl(), 10, 7).unwrap();
    for (c, alpha) in [(1.0, 1.0), (2.5, 0.5), (0.7, 2.0)] {
        let intensity = IntensityMeasure::new(c, alpha).unwrap();
        for f in battery.members() {
            let lo = 1.0 / f.support_level() as f64;
            // Support sits inside K_L; beyond x = 50 the battery members vanish.
            assert_eq!(f.eval(&Point::scalar(50.0)), 0.0);
            let oracle = (-trapezoid_exponent(f, c, alpha, lo, 50.0, 2_000_000)).exp();
            let exact = laplace_poisson_exact(&intensity, f, DEFAULT_QUAD_TOL).unwrap();
            assert!((exact - oracle).abs() <= 1e-7, "c={c} alpha={alpha}: {exact} vs {oracle}");
        }
    }
}

#[test]
fn laplace_exact_examples() {
    let zero = TestFunction::zero(hl());
    assert_eq!(laplace_poisson_exact(&unit(), &zero, DEFAULT_QUAD_TOL).unwrap(), 1.0);
    let limit = (-(1.0 - (-1.0f64).exp()) / 6.0).exp();
    let b = Region::closed(2.0, 3.0);
    let coarse = laplace_poisson_exact(&unit(), &TestFunction::lower_approx(hl(), b.clone(), 10_000).unwrap(), 1e-8).unwrap();
    assert!((coarse - limit).abs() < 1e-4, "{coarse} vs {limit}");
    let f = TestFunction::lower_approx(hl(), b, 3).unwrap();
    let loose = laplace_poisson_exact(&unit(), &f, 1e-8).unwrap();
    let tight = laplace_poisson_exact(&unit(), &f, 1e-12).unwrap();
    assert!((loose.ln() - tight.ln()).abs() <= 1e-8 * tight.ln().abs());
    let two = IntensityMeasure::new(2.0, 1.0).unwrap();
    let l1 = laplace_poisson_exact(&unit(), &f, 1e-10).unwrap();
    let l2 = laplace_poisson_exact(&two, &f, 1e-10).unwrap();
    assert!((l2.ln() - 2.0 * l1.ln()).abs() < 1e-12);
}

#[test]
fn extremes_exact_laplace_matches_monte_carlo() {
    let battery = lipschitz_battery(hl(), 6, 11).unwrap();
    let model = RandomMeasureModel::empirical_extremes(50, 1.0).unwrap();
    let est = laplace_mc_batch(&model, battery.members(), 20_000, 8).unwrap();
    let mut agree = 0;
    for (f, e) in battery.members().iter().zip(&est) {
        let exact = model.laplace_exact(f, DEFAULT_QUAD_TOL).unwrap();
        if (e.estimate - exact).abs() <= 3.0 * e.stderr {
            agree += 1;
        }
    }
    assert!(agree >= 5, "{agree}/6");
}

#[test]
fn laplace_is_monotone_in_the_function() {
    let model = RandomMeasureModel::poisson(unit());
    for (lo, hi) in [(1.0, 2.0), (0.5, 3.0), (2.0, 5.0)] {
        let b = Region::closed(lo, hi);
        for m in [1, 2, 4] {
            let low = TestFunction::lower_approx(hl(), b.clone(), m).unwrap();
            let up = TestFunction::upper_approx(hl(), b.clone(), m + 2).unwrap();
            let e = laplace_mc_batch(&model, &[low, up], 5_000, 21).unwrap();
            let joint = (e[0].stderr.powi(2) + e[1].stderr.powi(2)).sqrt();
            assert!(e[1].estimate <= e[0].estimate + 4.0 * joint);
        }
    }
}

#[test]
fn batch_and_single_estimates_agree() {
    let model = RandomMeasureModel::poisson(unit());
    let battery = lipschitz_battery(hl(), 5, 2).unwrap();
    let batch = laplace_mc_batch(&model, battery.members(), 500, 77).unwrap();
    for (f, b) in battery.members().iter().zip(&batch) {
        assert_eq!(laplace_mc(&model, f, 500, 77).unwrap(), *b);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = RandomMeasureModel::empirical_extremes(1_000, 1.0).unwrap();
    let battery = lipschitz_battery(hl(), 6, 4).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| laplace_mc_batch(&model, battery.members(), 2_000, 13).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn tester_examples() {
    let battery = lipschitz_battery(hl(), 8, 5).unwrap();
    let target = RandomMeasureModel::poisson(unit());
    let opts = TesterOptions {
        n_grid: vec![10, 100],
        reps: 2_000,
        seed: 1,
        ..TesterOptions::default()
    };
    let same = test_convergence_in_distribution(&|_| Ok(target.clone()), &target, &battery, &opts).unwrap();
    assert_eq!(same.verdict, Tri::Pass);
    assert!(same.rows.iter().all(|r| r.exact.is_some() && r.z.is_finite()));
    assert_eq!(same.caveat, CAVEAT);
    assert!(same.caveat.contains("consistent with convergence"));

    let doubled = RandomMeasureModel::poisson(IntensityMeasure::new(2.0, 1.0).unwrap());
    let small = test_convergence_in_distribution(&|_| Ok(doubled.clone()), &target, &battery, &opts).unwrap();
    let big_opts = TesterOptions { reps: 20_000, ..opts.clone() };
    let big = test_convergence_in_distribution(&|_| Ok(doubled.clone()), &target, &battery, &big_opts).unwrap();
    assert_eq!(small.verdict, Tri::Fail);
    assert!(big.max_abs_z[1].1 > small.max_abs_z[1].1);
}

#[test]
fn tester_falls_back_to_monte_carlo_targets() {
    let space = GroundSpace::euclidean(1).unwrap();
    let battery = lipschitz_battery(space, 4, 5).unwrap();
    let mu = DiscreteMeasure::from_scalars(space, &[(0.1, 1.0), (0.4, 2.0)]).unwrap();
    let target = RandomMeasureModel::fixed(mu);
    let opts = TesterOptions {
        n_grid: vec![1],
        reps: 200,
        seed: 1,
        ..TesterOptions::default()
    };
    let r = test_convergence_in_distribution(&|_| Ok(target.clone()), &target, &battery, &opts).unwrap();
    assert_eq!(r.verdict, Tri::Pass);
    let poisson = RandomMeasureModel::poisson(unit());
    assert!(matches!(
        test_convergence_in_distribution(&|_| Ok(poisson.clone()), &target, &battery, &opts),
        Err(Error::SpaceMismatch { .. })
    ));
}

#[test]
fn monotone_rule_is_opt_in() {
    let battery = lipschitz_battery(hl(), 8, 5).unwrap();
    let target = RandomMeasureModel::poisson(unit());
    let base = TesterOptions {
        n_grid: vec![10, 100, 1000],
        reps: 1_000,
        seed: 2,
        ..TesterOptions::default()
    };
    let strict = TesterOptions {
        require_monotone: true,
        ..base.clone()
    };
    let loose = test_convergence_in_distribution(&|_| Ok(target.clone()), &target, &battery, &base).unwrap();
    let tight = test_convergence_in_distribution(&|_| Ok(target.clone()), &target, &battery, &strict).unwrap();
    assert_eq!(loose.verdict, Tri::Pass);
    let z = &tight.max_abs_z;
    let expected = if z[2].1 <= z[1].1 { Tri::Pass } else { Tri::Inconclusive };
    assert_eq!(tight.verdict, expected);
}

#[test]
fn model_descriptors() {
    let p: ModelSpec = serde_json::from_str(r#"{"kind":"poisson","c":1.0,"alpha":1.0}"#).unwrap();
    assert_eq!(RandomMeasureModel::new(p).unwrap(), RandomMeasureModel::poisson(unit()));
    let e: ModelSpec = serde_json::from_str(r#"{"kind":"empirical_extremes","n":1000,"alpha":1.0}"#).unwrap();
    assert!(RandomMeasureModel::new(e).is_ok());
    let bad: ModelSpec = serde_json::from_str(r#"{"kind":"empirical_extremes","n":0,"alpha":1.0}"#).unwrap();
    assert!(RandomMeasureModel::new(bad).is_err());
    assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"poisson","c":1.0,"alpha":1.0,"beta":2}"#).is_err());
}
