use divkit::geometry::hyperboloid::mdot;
use divkit::geometry::horo::{from_horo_raw, to_horo_raw};
use divkit::geometry::{FactorKind, HypGeodesic, ModelSpace};
use proptest::prelude::*;

fn spaces() -> Vec<ModelSpace> {
    ["H2", "H3", "R2", "H2xR2", "H2xH2"].iter().map(|d| divkit::experiments::parse_space(d).unwrap()).collect()
}

/// Stored coordinates from spatial coordinates, `dim` entries per factor.
fn point(space: &ModelSpace, xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(space.coord_len());
    let mut it = xs.iter();
    for f in space.factors() {
        let part: Vec<f64> = it.by_ref().take(f.dim).cloned().collect();
        if f.kind == FactorKind::Hyperbolic {
            out.push((1.0 + part.iter().map(|v| v * v).sum::<f64>()).sqrt());
        }
        out.extend(part);
    }
    out
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 4)
}

fn hyperboloid_residuals(space: &ModelSpace, p: &[f64]) -> f64 {
    (0..space.factors().len())
        .filter(|&i| space.factors()[i].kind == FactorKind::Hyperbolic)
        .map(|i| (mdot(&p[space.factor_range(i)], &p[space.factor_range(i)]) + 1.0).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn metric_axioms(a in coords(), b in coords(), c in coords(), which in 0usize..5) {
        let space = &spaces()[which];
        let (p, q, r) = (point(space, &a), point(space, &b), point(space, &c));
        let (pq, qp) = (space.dist_raw(&p, &q), space.dist_raw(&q, &p));
        prop_assert_eq!(pq, qp);
        prop_assert!(pq >= 0.0);
        prop_assert!(space.dist_raw(&p, &p) < 1e-9);
        let (qr, pr) = (space.dist_raw(&q, &r), space.dist_raw(&p, &r));
        prop_assert!(pr <= pq + qr + 1e-9 * pr.max(1.0), "{} > {} + {}", pr, pq, qr);
    }

    #[test]
    fn geodesics_stay_on_the_model_and_are_additive(
        a in coords(), b in coords(), s in -0.5f64..1.5, t in -0.5f64..1.5, which in 0usize..5,
    ) {
        let space = &spaces()[which];
        let (p, q) = (point(space, &a), point(space, &b));
        let (gs, gt) = (space.geodesic_raw(&p, &q, s), space.geodesic_raw(&p, &q, t));
        prop_assert!(hyperboloid_residuals(space, &gs) < 1e-9 * gs[0].abs().max(1.0).powi(2));
        let d = space.dist_raw(&p, &q);
        let want = (s - t).abs() * d;
        prop_assert!((space.dist_raw(&gs, &gt) - want).abs() < 1e-9 * want.max(1.0) * 10.0);
    }

    #[test]
    fn radial_projection_is_one_lipschitz_outside_the_ball(
        a in coords(), b in coords(), frac in 0.05f64..1.0, which in 0usize..5,
    ) {
        let space = &spaces()[which];
        let (p, q) = (point(space, &a), point(space, &b));
        let r = frac * space.norm(&p).min(space.norm(&q));
        prop_assume!(r > 1e-3);
        let pp = space.radial_project_raw(&p, r).unwrap();
        let qq = space.radial_project_raw(&q, r).unwrap();
        prop_assert!((space.norm(&pp) - r).abs() < 1e-9 * r.max(1.0));
        prop_assert!(space.dist_raw(&pp, &qq) <= space.dist_raw(&p, &q) + 1e-9);
        let again = space.radial_project_raw(&pp, r).unwrap();
        prop_assert!(space.dist_raw(&again, &pp) < 1e-9);
    }

    #[test]
    fn horospherical_round_trip(x in -6.0f64..6.0, y in -6.0f64..6.0, z in -6.0f64..6.0, axis in 1usize..4, flip: bool) {
        let g = if flip { HypGeodesic::axis(3, axis).reversed() } else { HypGeodesic::axis(3, axis) };
        let p = {
            let mut c = vec![0.0, x, y, z];
            c[0] = (1.0 + x * x + y * y + z * z).sqrt();
            c
        };
        let back = from_horo_raw(&to_horo_raw(&p, &g), &g);
        let err = divkit::geometry::hyperboloid::dist(&p, &back);
        prop_assert!(err < 1e-9, "{}", err);
    }
}
