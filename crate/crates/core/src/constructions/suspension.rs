//! Suspension of a sphere map in `X` to a sphere map in `X x R`.

use std::f64::consts::PI;

use crate::error::{domain, structural};
use crate::geometry::{FactorKind, ModelSpace, ProductPoint};
use crate::simplicial::{suspension_complex, ManifoldMap, SPHERE_TOL};
use crate::Result;

/// Default number of segments per meridian.
pub const SUSPENSION_SEGMENTS: usize = 16;

/// `suspend_with` using [`SUSPENSION_SEGMENTS`] segments per meridian.
pub fn suspend(space: &ModelSpace, f: &ManifoldMap, r: f64) -> Result<ManifoldMap> {
    suspend_with(space, f, r, SUSPENSION_SEGMENTS)
}

/// Sweeps each image point `f(p)` along the half circle of radius `r` in the
/// 2-flat spanned by the geodesic through the basepoint and `f(p)` and the
/// `R` direction, from `(x0, r)` through `(f(p), 0)` to `(x0, -r)`.
///
/// `space` must be `X x R` (last factor Euclidean of dimension 1); `f` may
/// live either in `X` or in `X x R` with vanishing last coordinate. Use an
/// even `segments` so that the equator is a ring of vertices.
pub fn suspend_with(space: &ModelSpace, f: &ManifoldMap, r: f64, segments: usize) -> Result<ManifoldMap> {
    let nf = space.factors().len();
    let last = space.factors()[nf - 1];
    if nf < 2 || last.kind != FactorKind::Euclidean || last.dim != 1 {
        return Err(structural("suspension needs a space of the form X x R"));
    }
    if !(r > 0.0) {
        return Err(domain("radius must be positive"));
    }
    let x_len = space.coord_len() - 1;
    let embedded = f.space().factors() == space.factors();
    if !embedded && f.space().factors() != &space.factors()[..nf - 1] {
        return Err(structural("sphere map lives in neither X nor X x R"));
    }
    let base = space.basepoint().coords();
    let base_x = &base[..x_len];
    let base_z = base[x_len];
    let tol = SPHERE_TOL * r.max(1.0);
    let mut xs = Vec::with_capacity(f.images().len());
    for p in f.images() {
        let c = p.coords();
        if embedded && (c[x_len] - base_z).abs() > tol {
            return Err(domain("sphere map leaves the slice X x {0}"));
        }
        let x = c[..x_len].to_vec();
        let mut full = x.clone();
        full.push(base_z);
        let d = space.norm(&full);
        if (d - r).abs() > tol {
            return Err(domain(format!("sphere map image at distance {d}, expected {r}")));
        }
        xs.push(x);
    }

    let complex = suspension_complex(f.complex(), segments)?;
    let v = f.complex().num_vertices();
    let x_space = ModelSpace::new(space.factors()[..nf - 1].to_vec())?;
    let x_space = x_space.with_basepoint(ProductPoint(base_x.to_vec()))?;
    let point = |x: &[f64], t: f64| -> ProductPoint {
        // (a, z) = (r sin(pi t), r cos(pi t)) in the flat; a / r = sin(pi t)
        let mut c = x_space.geodesic_raw(base_x, x, (PI * t).sin());
        c.push(base_z + r * (PI * t).cos());
        ProductPoint(c)
    };
    let mut images = Vec::with_capacity(complex.num_vertices());
    for j in 1..segments {
        let t = j as f64 / segments as f64;
        for x in &xs {
            images.push(point(x, t));
        }
    }
    images.push(point(base_x, 0.0));
    images.push(point(base_x, 1.0));
    debug_assert_eq!(images.len(), v * (segments - 1) + 2);
    ManifoldMap::new(space.clone(), complex, images)?.with_quadrature_order(f.quadrature_order())
}
