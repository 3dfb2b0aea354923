//! Embedded hyperbolic leaves `Y_s`, horosphere products `Z` and flat
//! spheres in a product `H^{m_1} x .. x H^{m_k}`.
//!
//! Each factor carries the geodesic `g_i` through its basepoint along the
//! first tangent axis. The diagonal `gamma(t) = (g_1(t / sqrt k), ..,
//! g_k(t / sqrt k))` is a unit speed geodesic in the flat
//! `F = g_1 x .. x g_k`. The leaf `Y_s` (with `sum s_i = 0`) consists of
//! the points whose `i`-th factor has vertical coordinate `t / sqrt k + s_i`
//! relative to `g_i`, for a common `t`. Leaf shifts are measured in unit
//! speed along each `g_i`, so distinct leaves meet `F` in parallel lines
//! at distance `|s - s'|`.

use crate::error::{domain, structural};
use crate::geometry::horo::{from_horo_raw, to_horo_raw};
use crate::geometry::{FactorKind, HoroCoords, HypGeodesic, HypPoint, ModelSpace, ProductPoint};
use crate::simplicial::{triangulate_sphere, ManifoldMap};
use crate::Result;

/// Leaf index `s` with `sum s_i = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafParam(Vec<f64>);

impl LeafParam {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        let sum: f64 = s.iter().sum();
        let scale = s.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if (sum).abs() > 1e-12 * scale {
            return Err(domain(format!("leaf parameters sum to {sum}, not 0")));
        }
        Ok(LeafParam(s))
    }

    pub fn zero(k: usize) -> Self {
        LeafParam(vec![0.0; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean distance between leaf indices.
    pub fn distance(&self, other: &LeafParam) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// A point of `Y_s` in `(t, u)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct YCoords {
    pub t: f64,
    pub u: Vec<f64>,
}

fn check_product(space: &ModelSpace) -> Result<()> {
    if !space.is_hyperbolic_product() {
        return Err(structural("need a product of hyperbolic factors"));
    }
    if space.factors().iter().any(|f| f.dim < 2) {
        return Err(structural("every hyperbolic factor needs dimension at least 2"));
    }
    Ok(())
}

/// The axes `g_i` through the basepoint of each factor.
pub fn diagonal_axes(space: &ModelSpace) -> Result<Vec<HypGeodesic>> {
    check_product(space)?;
    let base = space.basepoint().coords();
    (0..space.factors().len())
        .map(|i| {
            let x = &base[space.factor_range(i)];
            let dir = crate::geometry::hyperboloid::tangent_frame(x).swap_remove(0);
            HypGeodesic::new(&HypPoint::new(x.to_vec())?, &dir)
        })
        .collect()
}

/// Dimension of the horizontal coordinate `u`: `sum (m_i - 1)`.
pub fn horizontal_dim(space: &ModelSpace) -> usize {
    space.factors().iter().map(|f| f.dim - 1).sum()
}

/// Point of the leaf `Y_s` with coordinates `(t, u)`.
pub fn embed_y_point(space: &ModelSpace, t: f64, u: &[f64], s: &LeafParam) -> Result<ProductPoint> {
    let axes = diagonal_axes(space)?;
    let k = axes.len();
    if u.len() != horizontal_dim(space) {
        return Err(structural(format!("u has length {}, expected {}", u.len(), horizontal_dim(space))));
    }
    if s.0.len() != k {
        return Err(structural("leaf parameter has the wrong length"));
    }
    let sk = (k as f64).sqrt();
    let mut c = Vec::with_capacity(space.coord_len());
    let mut off = 0;
    for (i, g) in axes.iter().enumerate() {
        let m = space.factors()[i].dim;
        let h = HoroCoords { u: u[off..off + m - 1].to_vec(), s: t / sk + s.0[i] };
        off += m - 1;
        c.extend(from_horo_raw(&h, g));
    }
    Ok(ProductPoint(c))
}

/// Point of `Z`: factor 1 on the horosphere about `g_1(+inf)`, the other
/// factors on the horospheres about `g_i(-inf)`, all through `gamma(t)`.
pub fn embed_z_point(space: &ModelSpace, t: f64, u1: &[f64], u2: &[f64]) -> Result<ProductPoint> {
    let axes = diagonal_axes(space)?;
    let k = axes.len();
    let m1 = space.factors()[0].dim;
    if u1.len() != m1 - 1 || u2.len() != horizontal_dim(space) - (m1 - 1) {
        return Err(structural("horizontal coordinates have the wrong length"));
    }
    let sk = (k as f64).sqrt();
    let mut c = from_horo_raw(&HoroCoords { u: u1.to_vec(), s: t / sk }, &axes[0]);
    let mut off = 0;
    for (i, g) in axes.iter().enumerate().skip(1) {
        let m = space.factors()[i].dim;
        let h = HoroCoords { u: u2[off..off + m - 1].to_vec(), s: -t / sk };
        off += m - 1;
        c.extend(from_horo_raw(&h, &g.reversed()));
    }
    Ok(ProductPoint(c))
}

/// Per-factor horospherical coordinates relative to the axes.
pub fn factor_horo_coords(space: &ModelSpace, p: &ProductPoint) -> Result<Vec<HoroCoords>> {
    let axes = diagonal_axes(space)?;
    space.validate(p)?;
    Ok(axes.iter().enumerate().map(|(i, g)| to_horo_raw(&p.0[space.factor_range(i)], g)).collect())
}

/// Leaf index and `(t, u)` coordinates of a point; every point of the
/// product lies on exactly one leaf.
pub fn y_coordinates(space: &ModelSpace, p: &ProductPoint) -> Result<(LeafParam, YCoords)> {
    let h = factor_horo_coords(space, p)?;
    let k = h.len() as f64;
    let mean = h.iter().map(|c| c.s).sum::<f64>() / k;
    let s = LeafParam(h.iter().map(|c| c.s - mean).collect());
    let u = h.iter().flat_map(|c| c.u.iter().copied()).collect();
    Ok((s, YCoords { t: mean * k.sqrt(), u }))
}

/// Leaf index of a point, from the Busemann functions of the axes.
pub fn leaf_coordinate(space: &ModelSpace, p: &ProductPoint) -> Result<LeafParam> {
    Ok(y_coordinates(space, p)?.0)
}

/// Intrinsic distance in a leaf with metric `dt^2 + e^{-2t/sqrt k} |du|^2`,
/// the hyperbolic space of curvature `-1/k`.
pub fn y_intrinsic_dist(p: &YCoords, q: &YCoords, k: usize) -> f64 {
    let sk = (k as f64).sqrt();
    let (s, s2) = (p.t / sk, q.t / sk);
    let du2: f64 = p.u.iter().zip(&q.u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / k as f64;
    let half = 0.5 * (du2 * (-(s + s2)).exp() + 4.0 * (0.5 * (s - s2)).sinh().powi(2)).sqrt();
    sk * 2.0 * half.asinh()
}

#[derive(Clone, Debug)]
pub struct YPath {
    /// Sample points along ascent, traverse and descent.
    pub points: Vec<ProductPoint>,
    pub length: f64,
    /// `sup_i` of the vertical extent of the factor geodesics.
    pub tau: f64,
    pub ascent: f64,
    pub traverse: f64,
    pub descent: f64,
}

/// Vertical extent of the geodesic between `(w1, v1)` and `(w2, v2)` in
/// horospherical coordinates: the total variation of the vertical
/// coordinate along it.
fn vertical_extent(w1: &[f64], v1: f64, w2: &[f64], v2: f64) -> f64 {
    let d = w1.iter().zip(w2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if d == 0.0 {
        return (v1 - v2).abs();
    }
    // half-space picture: heights z = e^v, the geodesic is a half circle
    // centred on the boundary at distance c from w1 along w2 - w1
    let (z1, z2) = (v1.exp(), v2.exp());
    let c = (d * d + z2 * z2 - z1 * z1) / (2.0 * d);
    if (0.0..=d).contains(&c) {
        let log_r = 0.5 * (c * c + z1 * z1).ln();
        2.0 * log_r - v1 - v2
    } else {
        (v1 - v2).abs()
    }
}

/// Three-segment path in a leaf between two of its points: diagonal ascent
/// to level `min(t, t') + sqrt(k) tau`, a geodesic in the product of
/// horospheres at that level, and a diagonal descent.
pub fn y_path(space: &ModelSpace, p: &ProductPoint, q: &ProductPoint, samples: usize) -> Result<YPath> {
    let (sp, cp) = y_coordinates(space, p)?;
    let (sq, cq) = y_coordinates(space, q)?;
    let scale = 1.0 + cp.t.abs().max(cq.t.abs());
    if sp.distance(&sq) > 1e-9 * scale {
        return Err(domain("points lie on different leaves"));
    }
    let k = space.factors().len();
    let sk = (k as f64).sqrt();
    let hp = factor_horo_coords(space, p)?;
    let hq = factor_horo_coords(space, q)?;
    let tau = hp
        .iter()
        .zip(&hq)
        .map(|(a, b)| vertical_extent(&a.u, a.s, &b.u, b.s))
        .fold(0.0, f64::max);
    let ta = cp.t.min(cq.t) + sk * tau;
    let mut traverse2 = 0.0;
    for (i, (a, b)) in hp.iter().zip(&hq).enumerate() {
        let level = ta / sk + sp.0[i];
        let du2: f64 = a.u.iter().zip(&b.u).map(|(x, y)| (x - y) * (x - y)).sum();
        traverse2 += (-2.0 * level).exp() * du2;
    }
    let traverse = traverse2.sqrt();
    let (ascent, descent) = (ta - cp.t, ta - cq.t);
    let n = samples.max(1);
    let mut points = Vec::with_capacity(3 * n + 1);
    let leaf = &sp;
    for j in 0..n {
        let f = j as f64 / n as f64;
        points.push(embed_y_point(space, cp.t + f * ascent, &cp.u, leaf)?);
    }
    for j in 0..n {
        let f = j as f64 / n as f64;
        let u: Vec<f64> = cp.u.iter().zip(&cq.u).map(|(a, b)| a + f * (b - a)).collect();
        points.push(embed_y_point(space, ta, &u, leaf)?);
    }
    for j in 0..=n {
        let f = j as f64 / n as f64;
        points.push(embed_y_point(space, ta - f * descent, &cq.u, leaf)?);
    }
    Ok(YPath { points, length: ascent + traverse + descent, tau, ascent, traverse, descent })
}

/// Distance from the midpoint of a horocyclic-chord geodesic to `Y`:
/// `min over l1 + l2 = l` of `sqrt((k - 1) l1^2 + l2^2)`, which is
/// `l sqrt((k - 1) / k)`.
pub fn nonconvexity_gap(l: f64, k: usize) -> f64 {
    assert!(k >= 2, "need at least two factors");
    let k = k as f64;
    l.max(0.0) * ((k - 1.0) / k).sqrt()
}

/// The round `(k-1)`-sphere of radius `r` in the flat `F`, centred at the
/// basepoint; reference point `y` maps to `(g_1(r y_1), .., g_k(r y_k))`.
pub fn flat_sphere(space: &ModelSpace, r: f64, depth: usize) -> Result<ManifoldMap> {
    let axes = diagonal_axes(space)?;
    let k = axes.len();
    if k < 2 {
        return Err(structural("flat spheres need at least two hyperbolic factors"));
    }
    if !(r > 0.0) {
        return Err(domain("radius must be positive"));
    }
    let complex = triangulate_sphere(k - 1, depth)?;
    ManifoldMap::from_fn(space.clone(), complex, |y| flat_point(&axes, &y.iter().map(|v| r * v).collect::<Vec<_>>()))
}

/// The point of the flat with unit-speed coordinates `x`.
pub fn flat_point(axes: &[HypGeodesic], x: &[f64]) -> ProductPoint {
    ProductPoint(axes.iter().zip(x).flat_map(|(g, &xi)| g.point_at(xi)).collect())
}

/// True if every factor of the space is hyperbolic of dimension at least 2.
pub fn supports_leaves(space: &ModelSpace) -> bool {
    space.factors().iter().all(|f| f.kind == FactorKind::Hyperbolic && f.dim >= 2)
}
