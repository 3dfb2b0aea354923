use divkit::geometry::{Factor, HypPoint, ModelSpace, ProductPoint};
use divkit::simplicial::{
    triangulate_ball, triangulate_sphere, ComplexKind, ManifoldMap, Role, SimplicialComplex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn h2() -> ModelSpace {
    ModelSpace::hyperbolic_product(&[2]).unwrap()
}

fn circle_map(r: f64, depth: usize) -> ManifoldMap {
    ManifoldMap::from_fn(h2(), triangulate_sphere(1, depth).unwrap(), |v| {
        let a = v[1].atan2(v[0]);
        ProductPoint(vec![r.cosh(), r.sinh() * a.cos(), r.sinh() * a.sin()])
    })
    .unwrap()
}

/// Lorentz boost along x1 followed by a rotation of the spatial plane.
fn isometry(x: &[f64], boost: f64, angle: f64) -> Vec<f64> {
    let (ch, sh) = (boost.cosh(), boost.sinh());
    let y = [ch * x[0] + sh * x[1], sh * x[0] + ch * x[1], x[2]];
    let (c, s) = (angle.cos(), angle.sin());
    let mut z = vec![y[0], c * y[1] - s * y[2], s * y[1] + c * y[2]];
    z[0] = (1.0 + z[1] * z[1] + z[2] * z[2]).sqrt();
    z
}

#[test]
fn constant_map_has_zero_volume() {
    let p = ProductPoint(HypPoint::from_spatial(&[0.3, 0.4]).into_coords());
    for k in 1..=3 {
        let m = ManifoldMap::from_fn(h2(), triangulate_sphere(k, 1).unwrap(), |_| p.clone()).unwrap();
        assert_eq!(m.k_volume(), 0.0);
        assert_eq!(m.lipschitz_estimate(), 0.0);
    }
}

#[test]
fn hyperbolic_circle_length() {
    let m = circle_map(2.0, 6);
    let want = 2.0 * PI * 2f64.sinh();
    assert!((m.k_volume() - want).abs() < 0.01 * want, "{}", m.k_volume());
}

#[test]
fn flat_two_sphere_area() {
    let space = ModelSpace::new(vec![Factor::euclidean(3)]).unwrap();
    let m = ManifoldMap::from_fn(space, triangulate_sphere(2, 4).unwrap(), |v| {
        ProductPoint(v.iter().map(|x| 3.0 * x).collect())
    })
    .unwrap();
    let want = 4.0 * PI * 9.0;
    let got = m.k_volume();
    assert!((got - want).abs() < 0.01 * want, "{got}");
}

#[test]
fn curved_two_sphere_area_in_h3() {
    // area of S(r) in H^3 is 4 pi sinh^2 r
    let space = ModelSpace::hyperbolic_product(&[3]).unwrap();
    let r: f64 = 1.5;
    let m = ManifoldMap::from_fn(space, triangulate_sphere(2, 5).unwrap(), |v| {
        let mut c = vec![r.cosh()];
        c.extend(v.iter().map(|x| r.sinh() * x));
        ProductPoint(c)
    })
    .unwrap();
    let want = 4.0 * PI * r.sinh().powi(2);
    let got = m.k_volume();
    assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");
}

#[test]
fn map_eval_corners_and_midpoints() {
    let m = circle_map(1.0, 2);
    let s = m.complex().simplices()[3].clone();
    let p = m.map_eval(3, &[1.0, 0.0]).unwrap();
    assert_eq!(p, *m.image(s[0]));
    let mid = m.map_eval(3, &[0.5, 0.5]).unwrap();
    let want = m.space().geodesic_point(m.image(s[0]), m.image(s[1]), 0.5).unwrap();
    assert!(m.space().dist(&mid, &want).unwrap() < 1e-12);
    assert!(m.map_eval(3, &[0.7, 0.7]).is_err());
    assert!(m.map_eval(3, &[1.2, -0.2]).is_err());
}

#[test]
fn map_eval_is_continuous_across_faces() {
    let space = ModelSpace::new(vec![Factor::hyperbolic(2), Factor::euclidean(1)]).unwrap();
    let c = triangulate_ball(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let images: Vec<ProductPoint> = (0..c.num_vertices())
        .map(|_| {
            let mut p = HypPoint::from_spatial(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).into_coords();
            p.push(rng.gen_range(-2.0..2.0));
            ProductPoint(p)
        })
        .collect();
    let m = ManifoldMap::new(space, c, images).unwrap();
    // find pairs of triangles sharing an edge and compare along the edge
    let simplices = m.complex().simplices().to_vec();
    let mut checked = 0;
    'outer: for (i, a) in simplices.iter().enumerate() {
        for (j, b) in simplices.iter().enumerate().skip(i + 1) {
            let shared: Vec<usize> = a.iter().copied().filter(|v| b.contains(v)).collect();
            if shared.len() != 2 {
                continue;
            }
            let t: f64 = rng.gen();
            let bary = |s: &[usize]| -> Vec<f64> {
                s.iter().map(|v| if *v == shared[0] { t } else if *v == shared[1] { 1.0 - t } else { 0.0 }).collect()
            };
            let p = m.map_eval(i, &bary(a)).unwrap();
            let q = m.map_eval(j, &bary(b)).unwrap();
            assert!(m.space().dist(&p, &q).unwrap() < 1e-9);
            checked += 1;
            if checked == 100 {
                break 'outer;
            }
        }
    }
    assert_eq!(checked, 100);
}

#[test]
fn refinement_counts_and_convergence() {
    let m = circle_map(2.0, 2);
    let r1 = m.refine();
    assert_eq!(r1.complex().simplices().len(), 2 * m.complex().simplices().len());
    let want = 2.0 * PI * 2f64.sinh();
    let (v0, v1) = (m.k_volume(), r1.k_volume());
    assert!(v0 <= v1 && v1 <= want);
    let v2 = r1.refine().k_volume();
    // refinement subdivides the same piecewise-geodesic map
    assert!((v2 - v1).abs() <= 0.5 * (v1 - v0).abs() + 1e-9 * v1, "{v0} {v1} {v2}");
    // new vertices sit within O(mesh^2) of S(r)
    let dev = |m: &ManifoldMap| {
        m.images().iter().map(|p| (m.space().norm(p.coords()) - 2.0).abs()).fold(0.0, f64::max)
    };
    let (d1, d2) = (dev(&r1), dev(&circle_map(2.0, 3).refine()));
    assert!(d2 < 0.3 * d1, "{d1} {d2}");

    let s = triangulate_sphere(2, 1).unwrap();
    let n = s.simplices().len();
    let m2 = ManifoldMap::from_fn(h2(), s, |v| ProductPoint(HypPoint::from_spatial(&[v[0], v[1] + v[2]]).into_coords()))
        .unwrap();
    assert_eq!(m2.refine().complex().simplices().len(), 4 * n);
}

#[test]
fn lipschitz_of_isometric_edge_and_circle() {
    let space = ModelSpace::new(vec![Factor::euclidean(1)]).unwrap();
    let c = SimplicialComplex::new(1, ComplexKind::Ball, vec![vec![0.0], vec![1.0]], vec![vec![0, 1]]).unwrap();
    let m = ManifoldMap::new(space, c, vec![ProductPoint(vec![3.0]), ProductPoint(vec![4.0])]).unwrap();
    assert!((m.lipschitz_estimate() - 1.0).abs() < 1e-15);

    // circle of radius r: chord over reference chord tends to sinh r
    let est = circle_map(2.0, 5).lipschitz_estimate();
    assert!((est - 2f64.sinh()).abs() < 0.01 * 2f64.sinh());
}

#[test]
fn volume_is_isometry_invariant() {
    let m = circle_map(1.5, 3).refine();
    let base = m.k_volume();
    let ball = triangulate_ball(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fill = ManifoldMap::from_fn(h2(), ball, |v| {
        ProductPoint(HypPoint::from_spatial(&[2.0 * v[0] + 0.1 * rng.gen::<f64>(), v[1] * v[0] + v[1]]).into_coords())
    })
    .unwrap();
    let fill_vol = fill.k_volume();
    for (b, a) in [(0.7, 1.1), (-1.3, 2.5), (2.0, -0.4)] {
        let moved = |mm: &ManifoldMap| {
            let imgs = mm.images().iter().map(|p| ProductPoint(isometry(p.coords(), b, a))).collect();
            ManifoldMap::new(mm.space().clone(), mm.complex().clone(), imgs).unwrap()
        };
        assert!((moved(&m).k_volume() - base).abs() < 1e-6 * base.max(1.0));
        assert!((moved(&fill).k_volume() - fill_vol).abs() < 1e-6 * fill_vol.max(1.0));
    }
}

#[test]
fn admissibility_examples() {
    // flat circle in H^2 x H^2 has length 2 pi r: admissible with A = 2 pi
    let hh = ModelSpace::hyperbolic_product(&[2, 2]).unwrap();
    let r: f64 = 2.0;
    let circle = ManifoldMap::from_fn(hh.clone(), triangulate_sphere(1, 6).unwrap(), |v| {
        let a = v[1].atan2(v[0]);
        let (x, y) = (r * a.cos(), r * a.sin());
        ProductPoint(vec![x.cosh(), x.sinh(), 0.0, y.cosh(), y.sinh(), 0.0])
    })
    .unwrap();
    let rep = circle.check_admissible(r, 1.0, 2.0 * PI, Role::Sphere).unwrap();
    assert!(rep.sphere_admissible, "{rep:?}");
    assert!(circle.check_admissible(r, 1.0, 2.0 * PI, Role::Filling).is_err());

    let p = circle.image(0).clone();
    let constant = ManifoldMap::from_fn(hh.clone(), triangulate_sphere(1, 2).unwrap(), |_| p.clone()).unwrap();
    let rep = constant.check_admissible(r, 1.0, 1e-3, Role::Sphere).unwrap();
    assert!(rep.sphere_admissible && rep.volume == 0.0);

    // a filling with one vertex at 0.5 rho r
    let ball = triangulate_ball(2, 2).unwrap();
    let apex = ball.num_vertices() - 1;
    let far = ProductPoint(vec![6f64.cosh(), 6f64.sinh(), 0.0, 1.0, 0.0, 0.0]);
    let mut imgs = vec![far; ball.num_vertices()];
    imgs[apex] = ProductPoint(vec![0.5f64.cosh(), 0.5f64.sinh(), 0.0, 1.0, 0.0, 0.0]);
    let fill = ManifoldMap::new(hh, ball, imgs).unwrap();
    let rep = fill.check_admissible(1.0, 1.0, 1.0, Role::Filling).unwrap();
    assert!(!rep.filling_admissible);
    assert!((rep.min_radius - 0.5).abs() < 1e-12);
    let rep = fill.check_admissible(1.0, 0.4, 1.0, Role::Filling).unwrap();
    assert!(rep.filling_admissible);
}

#[test]
fn admissibility_is_monotone_in_a_and_rho() {
    let m = circle_map(1.0, 4);
    let vol = m.k_volume();
    let mut prev = false;
    for a in [0.5, 1.0, vol * 0.99, vol * 1.01, 10.0] {
        let ok = m.check_admissible(1.0, 1.0, a, Role::Sphere).unwrap().sphere_admissible;
        assert!(!prev || ok);
        prev = ok;
    }
}

#[test]
fn json_round_trip_and_csv() {
    let m = circle_map(1.0, 2);
    let v = m.to_json();
    assert_eq!(v["complex"]["kind"], "sphere");
    let back = ManifoldMap::from_json(&v).unwrap();
    assert_eq!(back.images(), m.images());
    assert_eq!(back.complex(), m.complex());

    let mut buf = Vec::new();
    m.write_volume_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("simplex_index,volume\n"));
    assert_eq!(text.lines().count(), 1 + m.complex().simplices().len());
    assert!(!text.contains('\r'));
}

#[test]
fn zero_dimensional_spheres_and_polyline_balls() {
    let s0 = triangulate_sphere(0, 3).unwrap();
    assert_eq!(s0.num_vertices(), 2);
    let m = ManifoldMap::from_fn(h2(), s0, |v| {
        ProductPoint(vec![2f64.cosh(), 2f64.sinh() * v[0], 0.0])
    })
    .unwrap();
    assert_eq!(m.k_volume(), 0.0);

    let b1 = triangulate_ball(1, 0).unwrap();
    let fill = ManifoldMap::from_fn(h2(), b1, |v| ProductPoint(vec![(2.0 * v[0]).cosh(), (2.0 * v[0]).sinh(), 0.0]))
        .unwrap();
    assert!((fill.k_volume() - 4.0).abs() < 1e-12);
}
