//! Moving sphere maps along lipschitz quasi-isometries.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, structural};
use crate::geometry::{ModelSpace, ProductPoint};
use crate::simplicial::{ManifoldMap, Role, SimplicialComplex};
use crate::Result;

type PointFn = dyn Fn(&ProductPoint) -> ProductPoint + Send + Sync;

/// A map `X -> X'` with quasi-isometry constants `(K, epsilon, C)`.
/// The constants are declared, not certified; see [`QIMap::spot_check`].
#[derive(Clone)]
pub struct QIMap {
    pub source: ModelSpace,
    pub target: ModelSpace,
    forward: Arc<PointFn>,
    pub k: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl fmt::Debug for QIMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QIMap")
            .field("k", &self.k)
            .field("epsilon", &self.epsilon)
            .field("c", &self.c)
            .finish_non_exhaustive()
    }
}

impl QIMap {
    pub fn new(
        source: ModelSpace,
        target: ModelSpace,
        forward: impl Fn(&ProductPoint) -> ProductPoint + Send + Sync + 'static,
        k: f64,
        epsilon: f64,
        c: f64,
    ) -> Self {
        QIMap { source, target, forward: Arc::new(forward), k, epsilon, c }
    }

    pub fn identity(space: ModelSpace) -> Self {
        QIMap::new(space.clone(), space, |p| p.clone(), 1.0, 0.0, 0.0)
    }

    pub fn apply(&self, p: &ProductPoint) -> ProductPoint {
        (self.forward)(p)
    }

    /// Largest violation of `d(F x, F y) <= K d(x, y) + epsilon` over the
    /// given pairs (non-positive when all pairs comply).
    pub fn spot_check(&self, pairs: &[(ProductPoint, ProductPoint)]) -> f64 {
        pairs
            .iter()
            .map(|(x, y)| {
                let d = self.source.dist_raw(x.coords(), y.coords());
                let e = self.target.dist_raw(self.apply(x).coords(), self.apply(y).coords());
                e - (self.k * d + self.epsilon)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct TransportReport {
    /// `pi o F o f`, a sphere map onto `S'(r / L)`.
    pub map: ManifoldMap,
    pub source_volume: f64,
    pub volume: f64,
    /// `A L^{2k} (r / L)^k`.
    pub budget: f64,
    pub admissible: bool,
}

/// Applies `F` to the vertex images of `f` and projects radially onto
/// `S'(r / L)` with `L = K`. The result is `A L^{2k}`-admissible whenever `f`
/// is `A`-admissible and `F` is `L`-lipschitz.
pub fn transport_sphere(qi: &QIMap, f: &ManifoldMap, r: f64, a: f64) -> Result<TransportReport> {
    if f.space() != &qi.source {
        return Err(structural("sphere map does not live in the source of the quasi-isometry"));
    }
    let l = qi.k;
    let target_r = r / l;
    let mut images = Vec::with_capacity(f.images().len());
    for p in f.images() {
        let q = qi.apply(p);
        let proj = qi
            .target
            .radial_project_raw(q.coords(), target_r)
            .ok_or_else(|| domain("image hits the basepoint; projection undefined"))?;
        images.push(ProductPoint(proj));
    }
    let map = ManifoldMap::new(qi.target.clone(), f.complex().clone(), images)?
        .with_quadrature_order(f.quadrature_order())?;
    let k = f.dim() as i32;
    let budget = a * l.powi(2 * k) * target_r.powi(k);
    let rep = map.check_admissible(target_r, 1.0, a * l.powi(2 * k), Role::Sphere)?;
    Ok(TransportReport { source_volume: f.k_volume(), volume: rep.volume, budget, admissible: rep.sphere_admissible, map })
}

#[derive(Clone, Debug)]
pub struct StraightenedMap {
    pub map: ManifoldMap,
    /// Largest `d(F(v), f'(v))` over vertices; zero by construction.
    pub vertex_displacement: f64,
    /// Largest `d(f'(m), F(m))` over edge midpoints `m` of the positions.
    pub midpoint_displacement: f64,
    /// Longest edge of the net, measured in the source.
    pub mesh: f64,
}

/// Replaces `F` on a triangulated region of `X` by the piecewise-geodesic
/// map that agrees with `F` at the vertices. `positions[v]` is the point of
/// `X` at vertex `v` of `complex`.
pub fn straighten_map(
    qi: &QIMap,
    complex: &SimplicialComplex,
    positions: &[ProductPoint],
) -> Result<StraightenedMap> {
    if positions.len() != complex.num_vertices() {
        return Err(structural(format!(
            "{} positions for {} vertices",
            positions.len(),
            complex.num_vertices()
        )));
    }
    let images: Vec<ProductPoint> = positions.iter().map(|p| qi.apply(p)).collect();
    let map = ManifoldMap::new(qi.target.clone(), complex.clone(), images)?;
    let vertex_displacement = positions
        .iter()
        .zip(map.images())
        .map(|(p, q)| qi.target.dist_raw(qi.apply(p).coords(), q.coords()))
        .fold(0.0, f64::max);
    let mut mesh: f64 = 0.0;
    let mut midpoint_displacement: f64 = 0.0;
    for (a, b) in complex.edges() {
        let (pa, pb) = (positions[a].coords(), positions[b].coords());
        mesh = mesh.max(qi.source.dist_raw(pa, pb));
        let mid = ProductPoint(qi.source.geodesic_raw(pa, pb, 0.5));
        let straight = qi.target.geodesic_raw(map.image(a).coords(), map.image(b).coords(), 0.5);
        midpoint_displacement = midpoint_displacement.max(qi.target.dist_raw(&straight, qi.apply(&mid).coords()));
    }
    Ok(StraightenedMap { map, vertex_displacement, midpoint_displacement, mesh })
}
