use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use divkit::constructions::{diagonal_axes, flat_point, LeafParam};
use divkit::divergence::*;
use divkit::geometry::{Factor, ModelSpace};
use divkit::simplicial::{triangulate_ball, ManifoldMap, Role};
use proptest::prelude::*;

fn h2() -> ModelSpace {
    ModelSpace::hyperbolic_product(&[2]).unwrap()
}

fn path_settings() -> SweepSettings {
    let mut s = SweepSettings::new(1.0, 1.0);
    s.optimizer.refine_rounds = 6;
    s
}

#[test]
fn initial_path_runs_through_the_far_point() {
    for r in [2.0, 3.0] {
        let problem = FillingProblem::new(antipodal_pair(&h2(), r).unwrap(), r, 1.0, 1.0).unwrap();
        let m = initial_filling(&problem).unwrap();
        let rep = m.check_admissible(r, 1.0, 1.0, Role::Filling).unwrap();
        assert!(rep.filling_admissible);
        assert!(rep.min_radius >= r - 1e-9);
        // boundary vertices come first and reproduce the sphere
        for i in 0..2 {
            assert_eq!(m.image(i), problem.sphere.image(i));
        }
        // The far point sits at a right angle, so each leg is at least the
        // geodesic acosh(cosh r cosh 5r), about 6r, and at most that plus the
        // quarter circle of S(r) its projection can wrap around.
        let leg = (r.cosh() * (5.0 * r).cosh()).acosh();
        assert!(rep.volume >= 2.0 * leg - 1e-6);
        assert!(rep.volume <= 2.0 * (leg + 0.5 * PI * r.sinh()), "{}", rep.volume);
        if r == 2.0 {
            assert!((rep.volume / (12.0 * r) - 1.0).abs() < 0.1, "{}", rep.volume);
        }
    }
}

#[test]
fn hyperbolic_paths_approach_the_half_circle() {
    let radii = [1.0, 2.0, 3.0, 4.0, 5.0];
    let entries = sweep_fillings(&h2(), 0, &radii, &SphereGenerator::AntipodalPair, &path_settings()).unwrap();
    for e in &entries {
        let r = e.point.r;
        let best = e.best.as_ref().unwrap();
        let oracle = PI * r.sinh();
        assert!(best.volume <= 1.1 * oracle, "r={r}: {} vs {oracle}", best.volume);
        assert!(best.volume >= 2.0 * r.sinh());
        assert!(best.volume <= best.start_volume);
        for h in &best.history {
            assert!(h.windows(2).all(|w| w[1] <= w[0]), "volume rose during descent");
        }
        let rep = best.filling.check_admissible(r, 1.0, 1.0, Role::Filling).unwrap();
        assert!(rep.min_radius >= r - 1e-9);
    }
    let series = GrowthSeries::from_values(entries.into_iter().map(|e| e.point).collect()).unwrap();
    let fit = series.fit.unwrap();
    assert_eq!(fit.kind, GrowthKind::Exponential);
    assert!((0.8..=1.1).contains(&fit.parameter), "{fit:?}");
}

#[test]
fn euclidean_paths_are_half_circles() {
    let plane = ModelSpace::new(vec![Factor::euclidean(2)]).unwrap();
    let radii = [1.0, 2.0, 3.0, 4.0, 5.0];
    let series = estimate_divergence(&plane, 0, &radii, &SphereGenerator::AntipodalPair, &path_settings()).unwrap();
    for (r, v) in series.values() {
        assert!((v / (PI * r) - 1.0).abs() < 0.02, "r={r}: {v}");
    }
    let fit = series.fit.unwrap();
    assert_eq!(fit.kind, GrowthKind::Polynomial);
    assert!((fit.parameter - 1.0).abs() < 0.1);
}

#[test]
fn infeasible_start_is_rejected() {
    let r = 2.0;
    let problem = FillingProblem::new(antipodal_pair(&h2(), r).unwrap(), r, 1.0, 1.0).unwrap();
    let m = initial_filling(&problem).unwrap();
    let mut images = m.images().to_vec();
    let last = images.len() - 1;
    images[last] = h2().basepoint().clone();
    let bad = ManifoldMap::new(h2(), m.complex().clone(), images).unwrap();
    let res = optimize_filling(&problem, &bad, &OptimizerConfig::default());
    assert!(matches!(res, Err(divkit::Error::Precondition(_))));

    let cfg = OptimizerConfig { step_shrink: 1.5, ..OptimizerConfig::default() };
    assert!(matches!(optimize_filling(&problem, &m, &cfg), Err(divkit::Error::Domain(_))));
}

#[test]
fn inadmissible_sphere_is_rejected() {
    let off = antipodal_pair(&h2(), 2.5).unwrap();
    assert!(matches!(FillingProblem::new(off, 2.0, 1.0, 1.0), Err(divkit::Error::Precondition(_))));
}

#[test]
fn seeds_are_reproducible_and_best_is_kept() {
    let space = ModelSpace::new(vec![Factor::hyperbolic(2), Factor::euclidean(1)]).unwrap();
    let r = 1.0;
    let sphere = SphereGenerator::suspended().build(&space, r).unwrap();
    let problem = FillingProblem::new(sphere, r, 1.0, 2.0 * PI).unwrap().with_layers(3).unwrap();
    let start = initial_filling(&problem).unwrap();
    let cfg = OptimizerConfig { max_iters: 15, seeds: 3, tolerance: 1e-3, ..OptimizerConfig::default() };
    let a = optimize_filling(&problem, &start, &cfg).unwrap();
    let b = optimize_filling(&problem, &start, &cfg).unwrap();
    assert_eq!(a.volume, b.volume);
    assert_eq!(a.seed, b.seed);
    assert!(a.volume <= a.start_volume);
    assert!(a.seed < 3);
    let rep = a.filling.check_admissible(r, 1.0, 2.0 * PI, Role::Filling).unwrap();
    assert!(rep.filling_admissible);
    assert!((rep.volume - a.volume).abs() < 1e-9 * a.volume);
    for h in &a.history {
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn flagged_radius_is_left_out_of_the_fit() {
    let gen = SphereGenerator::Custom(Arc::new(|space: &ModelSpace, r: f64| {
        // off the sphere at r = 3
        antipodal_pair(space, if r == 3.0 { 3.3 } else { r })
    }));
    let radii = [1.0, 2.0, 3.0, 4.0, 5.0];
    let mut settings = path_settings();
    settings.optimizer.refine_rounds = 3;
    let series = estimate_divergence(&h2(), 0, &radii, &gen, &settings).unwrap();
    let p = &series.points[2];
    assert!(!p.admissible);
    assert_eq!(p.volume, None);
    assert_eq!(series.values().len(), 4);
    assert!(series.fit.is_some());
    assert!(estimate_divergence(&h2(), 1, &radii, &SphereGenerator::AntipodalPair, &settings).is_err());
}

fn pts(f: impl Fn(f64) -> f64, radii: &[f64]) -> Vec<(f64, f64)> {
    radii.iter().map(|&r| (r, f(r))).collect()
}

#[test]
fn fit_growth_examples() {
    let radii = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let f = fit_growth(&pts(|r| r.powi(3), &radii)).unwrap();
    assert_eq!(f.kind, GrowthKind::Polynomial);
    assert!((f.parameter - 3.0).abs() < 0.01);
    let f = fit_growth(&pts(f64::exp, &radii)).unwrap();
    assert_eq!(f.kind, GrowthKind::Exponential);
    assert!((f.parameter - 1.0).abs() < 0.01);
    assert!((f.exponential().r_squared - 1.0).abs() < 1e-12);
    let f = fit_growth(&pts(|r| PI * r.sinh(), &radii)).unwrap();
    assert_eq!(f.kind, GrowthKind::Exponential);
    assert!((0.8..=1.1).contains(&f.parameter));
    // both hypotheses fit a short far-out stretch equally well
    let f = fit_growth(&pts(|r| r, &[10.0, 10.1, 10.2, 10.3])).unwrap();
    assert_eq!(f.kind, GrowthKind::Inconclusive);
    assert_eq!(f.polynomial().parameter, f.parameter);
}

#[test]
fn fit_growth_errors() {
    assert!(matches!(fit_growth(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]), Err(divkit::Error::Domain(_))));
    assert!(matches!(fit_growth(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 5.0)]), Err(divkit::Error::Domain(_))));
    assert!(matches!(fit_growth(&[(1.0, 1.0), (2.0, -2.0), (3.0, 3.0), (4.0, 5.0)]), Err(divkit::Error::Domain(_))));
    assert!(matches!(fit_growth(&[(1.0, 1.0), (1.0, 2.0), (3.0, 3.0), (4.0, 5.0)]), Err(divkit::Error::Domain(_))));
}

proptest! {
    #[test]
    fn fit_is_invariant_under_scaling(
        values in prop::collection::vec(0.1f64..1e3, 4..9),
        c in 1e-3f64..1e3,
        b in 0.1f64..10.0,
    ) {
        let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (1.0 + i as f64, v)).collect();
        let base = fit_growth(&points).unwrap();
        let scaled = fit_growth(&points.iter().map(|&(r, v)| (r, c * v)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(base.kind, scaled.kind);
        prop_assert!((base.parameter - scaled.parameter).abs() < 1e-9 * base.parameter.abs().max(1.0));
        let stretched = fit_growth(&points.iter().map(|&(r, v)| (b * r, v)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(base.kind, stretched.kind);
        prop_assert!((base.r_squared - stretched.r_squared).abs() < 1e-9);
        let (p0, p1) = (base.polynomial().parameter, stretched.polynomial().parameter);
        prop_assert!((p0 - p1).abs() < 1e-9 * p0.abs().max(1.0));
        let (e0, e1) = (base.exponential().parameter, stretched.exponential().parameter);
        prop_assert!((e0 - b * e1).abs() < 1e-9 * e0.abs().max(1.0));
    }
}

fn flat_disc(r: f64, depth: usize) -> ManifoldMap {
    let space = ModelSpace::hyperbolic_product(&[2, 2]).unwrap();
    let axes = diagonal_axes(&space).unwrap();
    ManifoldMap::from_fn(space, triangulate_ball(2, depth).unwrap(), |v| flat_point(&axes, &[r * v[0], r * v[1]])).unwrap()
}

#[test]
fn slice_of_the_flat_disc_is_a_diameter() {
    for r in [1.0, 3.0] {
        let disc = flat_disc(r, 3);
        let slice = leaf_slice(&disc, &LeafParam::zero(2)).unwrap();
        assert!(!slice.empty);
        assert!((slice.length / (2.0 * r) - 1.0).abs() < 0.02, "{}", slice.length);
        assert_eq!(slice.endpoints.len(), 2);
        let space = disc.space();
        let axes = diagonal_axes(space).unwrap();
        let tip = flat_point(&axes, &[r * FRAC_1_SQRT_2, r * FRAC_1_SQRT_2]);
        let antitip = flat_point(&axes, &[-r * FRAC_1_SQRT_2, -r * FRAC_1_SQRT_2]);
        for e in &slice.endpoints {
            let d = space.dist(e, &tip).unwrap().min(space.dist(e, &antitip).unwrap());
            assert!(d < 1.0);
        }
    }
}

#[test]
fn slice_outside_the_footprint_is_empty() {
    let disc = flat_disc(1.0, 2);
    let far = LeafParam::new(vec![5.0, -5.0]).unwrap();
    let slice = leaf_slice(&disc, &far).unwrap();
    assert!(slice.empty);
    assert_eq!(slice.length, 0.0);
    assert!(slice.endpoints.is_empty());
    assert!(leaf_slice(&disc, &LeafParam::zero(3)).is_err());
}

#[test]
fn growth_series_csv_and_json() {
    let points = vec![
        GrowthPoint { r: 1.0, volume: Some(2.5), admissible: true, seed_best: Some(0) },
        GrowthPoint { r: 2.0, volume: None, admissible: false, seed_best: None },
        GrowthPoint { r: 3.0, volume: Some(7.25), admissible: true, seed_best: Some(2) },
        GrowthPoint { r: 4.0, volume: Some(10.0), admissible: true, seed_best: Some(1) },
        GrowthPoint { r: 5.0, volume: Some(12.5), admissible: true, seed_best: Some(0) },
    ];
    let series = GrowthSeries::from_values(points).unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(
        text,
        "r,volume,admissible,seed_best\n1.0,2.5,true,0\n2.0,,false,\n3.0,7.25,true,2\n4.0,10.0,true,1\n5.0,12.5,true,0\n"
    );
    assert_eq!(GrowthSeries::read_csv(buf.as_slice()).unwrap(), series);
    let json = series.fit_json();
    for key in ["kind", "parameter", "r_squared", "alternative"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert!(json["alternative"].get("r_squared").is_some());
    assert!(GrowthSeries::from_values(vec![
        GrowthPoint { r: 2.0, volume: Some(1.0), admissible: true, seed_best: None },
        GrowthPoint { r: 1.0, volume: Some(1.0), admissible: true, seed_best: None },
    ])
    .is_err());
}

#[test]
fn antipodal_pair_layout() {
    // the pair sits at distance r on both sides of the basepoint
    let r = 1.7;
    let pair = antipodal_pair(&h2(), r).unwrap();
    let space = h2();
    let (p, q) = (pair.image(0), pair.image(1));
    assert!((space.dist(p, space.basepoint()).unwrap() - r).abs() < 1e-12);
    assert!((space.dist(p, q).unwrap() - 2.0 * r).abs() < 1e-12);
}
