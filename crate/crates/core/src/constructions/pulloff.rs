//! Loops in `X x R^2`: pushing a planar loop off the unit disc, and the
//! four-stage pull-off filling of a loop on `S(r)`.

use std::f64::consts::PI;

use crate::error::{precondition, structural};
use crate::geometry::{Factor, FactorKind, ModelSpace, ProductPoint};
use crate::simplicial::{layered_cone, triangulate_cylinder, triangulate_polygon, ManifoldMap, Role};
use crate::Result;

/// Largest angular step of the polygons that replace arcs of the unit circle.
const ARC_STEP: f64 = 0.05;

/// Layers of the cylinder carrying the straight-line homotopy.
const HOMOTOPY_LAYERS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbCase {
    /// The loop already avoids the open unit disc.
    Outside,
    /// The loop lies in the open unit disc and is translated.
    Inside,
    /// Sub-arcs inside the disc are replaced by arcs of the unit circle.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct PerturbedLoop {
    /// Closed polyline (first point repeated at the end).
    pub beta: Vec<[f64; 2]>,
    /// Straight-line homotopy from the input to `beta` on `S^1 x [0, 1]`.
    pub homotopy: ManifoldMap,
    pub case: PerturbCase,
    pub length: f64,
    pub area: f64,
}

pub fn polyline_length(p: &[[f64; 2]]) -> f64 {
    p.windows(2).map(|w| dist2(w[0], w[1])).sum()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn norm(a: [f64; 2]) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Homotopes a closed planar polyline off the open unit disc.
///
/// `beta` must be closed (last point equal to the first) with length at
/// most `a * r`. The three cases of the construction are: identity when
/// the loop already avoids the disc, translation by `(2, 0)` when it lies
/// inside, and otherwise replacement of every maximal sub-arc inside the
/// disc by the shorter arc of the unit circle between its endpoints
/// (counterclockwise for antipodal endpoints), realised as a polygon
/// circumscribed about the circle so that it stays outside the disc.
pub fn perturb_loop(beta: &[[f64; 2]], a: f64, r: f64) -> Result<PerturbedLoop> {
    if beta.len() < 2 || dist2(beta[0], beta[beta.len() - 1]) > 1e-12 {
        return Err(structural("loop is not closed"));
    }
    let len = polyline_length(beta);
    if len > a * r * (1.0 + 1e-12) {
        return Err(precondition(format!("loop length {len} exceeds A r = {}", a * r)));
    }
    let pts = &beta[..beta.len() - 1];
    let inside = |p: [f64; 2]| norm(p) < 1.0;
    let crosses = pts.iter().zip(pts.iter().cycle().skip(1)).any(|(&p, &q)| segment_min_norm(p, q) < 1.0);

    let (case, from, to) = if !crosses {
        (PerturbCase::Outside, pts.to_vec(), pts.to_vec())
    } else if pts.iter().all(|&p| inside(p)) {
        let moved = pts.iter().map(|p| [p[0] + 2.0, p[1]]).collect();
        (PerturbCase::Inside, pts.to_vec(), moved)
    } else {
        let (f, t) = replace_inside_arcs(pts);
        (PerturbCase::Mixed, f, t)
    };
    let homotopy = straight_homotopy(&from, &to)?;
    let mut closed = to.clone();
    closed.push(to[0]);
    let length = polyline_length(&closed);
    let area = if case == PerturbCase::Outside { 0.0 } else { homotopy.k_volume() };
    Ok(PerturbedLoop { beta: closed, homotopy, case, length, area })
}

fn segment_min_norm(p: [f64; 2], q: [f64; 2]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    if dd == 0.0 {
        return norm(p);
    }
    let t = (-(p[0] * d[0] + p[1] * d[1]) / dd).clamp(0.0, 1.0);
    norm(lerp(p, q, t))
}

/// Parameters in (0, 1) where the segment crosses the unit circle.
fn circle_crossings(p: [f64; 2], q: [f64; 2]) -> Vec<f64> {
    let d = [q[0] - p[0], q[1] - p[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return Vec::new();
    }
    let b = 2.0 * (p[0] * d[0] + p[1] * d[1]);
    let c = p[0] * p[0] + p[1] * p[1] - 1.0;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut out: Vec<f64> = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        .into_iter()
        .filter(|t| *t > 0.0 && *t < 1.0)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Returns matching vertex lists (input, output) of the mixed case: both
/// polylines are linear between consecutive shared parameters.
fn replace_inside_arcs(pts: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let n = pts.len();
    let start = (0..n).max_by(|&i, &j| norm(pts[i]).total_cmp(&norm(pts[j]))).unwrap();
    // walk the loop from an outside vertex, inserting crossing points
    let mut walk: Vec<[f64; 2]> = Vec::new();
    for s in 0..n {
        let p = pts[(start + s) % n];
        let q = pts[(start + s + 1) % n];
        walk.push(p);
        for t in circle_crossings(p, q) {
            let mut c = lerp(p, q, t);
            let m = norm(c);
            c = [c[0] / m, c[1] / m];
            walk.push(c);
        }
    }
    walk.push(walk[0]);

    let mut from = Vec::new();
    let mut to = Vec::new();
    let mut i = 0;
    while i + 1 < walk.len() {
        let mid = lerp(walk[i], walk[i + 1], 0.5);
        if norm(mid) >= 1.0 {
            from.push(walk[i]);
            to.push(walk[i]);
            i += 1;
            continue;
        }
        // maximal inside run walk[i] ..= walk[j]
        let mut j = i + 1;
        while j + 1 < walk.len() && norm(lerp(walk[j], walk[j + 1], 0.5)) < 1.0 {
            j += 1;
        }
        let run = &walk[i..=j];
        let arc = arc_polygon(walk[i], walk[j]);
        let (f, t) = common_parameterization(run, &arc);
        // drop the final point: it starts the next piece
        from.extend_from_slice(&f[..f.len() - 1]);
        to.extend_from_slice(&t[..t.len() - 1]);
        i = j;
    }
    (from, to)
}

/// Polygon from `a` to `b` (both on the unit circle) circumscribed about the
/// shorter arc; every segment is tangent to the circle.
fn arc_polygon(a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let ta = a[1].atan2(a[0]);
    let tb = b[1].atan2(b[0]);
    let mut delta = tb - ta;
    while delta <= -PI {
        delta += 2.0 * PI;
    }
    while delta > PI {
        delta -= 2.0 * PI;
    }
    if (delta.abs() - PI).abs() < 1e-12 {
        delta = PI;
    }
    if delta.abs() < 1e-15 {
        return vec![a, b];
    }
    let n = (delta.abs() / ARC_STEP).ceil().max(1.0) as usize;
    let step = delta / n as f64;
    let rad = 1.0 / (step / 2.0).cos();
    let mut out = vec![a];
    for j in 0..n {
        let th = ta + step / 2.0 + j as f64 * step;
        out.push([rad * th.cos(), rad * th.sin()]);
    }
    out.push(b);
    out
}

/// Resamples two polylines at the union of their normalised arclength
/// breakpoints.
fn common_parameterization(p: &[[f64; 2]], q: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let params = |v: &[[f64; 2]]| -> Vec<f64> {
        let total = polyline_length(v);
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in v.windows(2) {
            acc += dist2(w[0], w[1]);
            out.push(if total > 0.0 { acc / total } else { 1.0 });
        }
        *out.last_mut().unwrap() = 1.0;
        out
    };
    let (sp, sq) = (params(p), params(q));
    let mut all: Vec<f64> = sp.iter().chain(&sq).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let at = |v: &[[f64; 2]], s: &[f64], u: f64| -> [f64; 2] {
        let i = s.partition_point(|&x| x <= u).clamp(1, s.len() - 1);
        let span = s[i] - s[i - 1];
        let t = if span > 0.0 { ((u - s[i - 1]) / span).clamp(0.0, 1.0) } else { 0.0 };
        lerp(v[i - 1], v[i], t)
    };
    let mut a: Vec<[f64; 2]> = all.iter().map(|&u| at(p, &sp, u)).collect();
    let mut b: Vec<[f64; 2]> = all.iter().map(|&u| at(q, &sq, u)).collect();
    // pin the endpoints exactly
    a[0] = p[0];
    *a.last_mut().unwrap() = *p.last().unwrap();
    b[0] = q[0];
    *b.last_mut().unwrap() = *q.last().unwrap();
    (a, b)
}

fn straight_homotopy(from: &[[f64; 2]], to: &[[f64; 2]]) -> Result<ManifoldMap> {
    let n = from.len();
    let plane = ModelSpace::new(vec![Factor::euclidean(2)])?;
    if n < 3 {
        // degenerate loops: pad with repeated points so the polygon exists
        let f: Vec<_> = (0..3).map(|i| from[i.min(n - 1)]).collect();
        let t: Vec<_> = (0..3).map(|i| to[i.min(n - 1)]).collect();
        return straight_homotopy(&f, &t);
    }
    let cyl = triangulate_cylinder(&triangulate_polygon(n)?, HOMOTOPY_LAYERS)?;
    let mut images = Vec::with_capacity(cyl.num_vertices());
    for j in 0..=HOMOTOPY_LAYERS {
        let t = j as f64 / HOMOTOPY_LAYERS as f64;
        for i in 0..n {
            images.push(ProductPoint(lerp(from[i], to[i], t).to_vec()));
        }
    }
    ManifoldMap::new(plane, cyl, images)
}

#[derive(Clone, Debug)]
pub struct PulloffFilling {
    pub filling: ManifoldMap,
    /// Areas of the four homotopy bands, in order.
    pub stage_areas: [f64; 4],
    pub area: f64,
    /// `35 A r^3`.
    pub budget: f64,
    /// The far point `(x1, 0)` the loop is contracted to.
    pub apex: ProductPoint,
}

/// Layers per stage used by [`pulloff_filling`].
pub const PULLOFF_STAGE_LAYERS: usize = 4;

/// Fills a loop on `S(r)` in `X x R^2` by the tracks of four homotopies:
/// radial push to radius `3r` in `R^2`, coning to the basepoint in `X`,
/// pulling along a geodesic to a point `x1` at distance `5r` in `X`, and
/// coning to the origin in `R^2`. Each stage takes an equal band of the
/// disc. `x1` sits on the first coordinate axis of the first factor of `X`.
pub fn pulloff_filling(space: &ModelSpace, gamma: &ManifoldMap, a: f64, r: f64) -> Result<PulloffFilling> {
    pulloff_filling_with(space, gamma, a, r, PULLOFF_STAGE_LAYERS)
}

pub fn pulloff_filling_with(
    space: &ModelSpace,
    gamma: &ManifoldMap,
    a: f64,
    r: f64,
    stage_layers: usize,
) -> Result<PulloffFilling> {
    let nf = space.factors().len();
    let last = space.factors()[nf - 1];
    if nf < 2 || last.kind != FactorKind::Euclidean || last.dim != 2 {
        return Err(structural("pull-off filling needs a space of the form X x R^2"));
    }
    if gamma.space() != space || gamma.dim() != 1 {
        return Err(structural("gamma must be a loop in the given space"));
    }
    if stage_layers == 0 {
        return Err(structural("need at least one layer per stage"));
    }
    let rep = gamma.check_admissible(r, 1.0, a, Role::Sphere)?;
    if !rep.sphere_admissible {
        return Err(precondition(format!(
            "loop is not {a}-admissible on S({r}): length {}, radius deviation {}",
            rep.volume, rep.max_sphere_deviation
        )));
    }
    let xl = space.coord_len() - 2;
    let base = space.basepoint().coords();
    let plane = |p: &[f64]| [p[xl] - base[xl], p[xl + 1] - base[xl + 1]];
    for (u, v) in gamma.complex().edges() {
        let d = segment_min_norm(plane(gamma.image(u).coords()), plane(gamma.image(v).coords()));
        if d < 1.0 - 1e-9 {
            return Err(precondition("R^2 projection of the loop enters the open unit disc"));
        }
    }

    let x_space = ModelSpace::new(space.factors()[..nf - 1].to_vec())?
        .with_basepoint(ProductPoint(base[..xl].to_vec()))?;
    let x0 = &base[..xl];
    let x1 = {
        let frame = x_space.tangent_frame(x0);
        x_space.exp_frame(x0, &frame, &[5.0 * r])
    };

    let m = stage_layers;
    let layers = 4 * m;
    let complex = layered_cone(gamma.complex(), layers)?;
    let nv = gamma.complex().num_vertices();
    let mut images = Vec::with_capacity(complex.num_vertices());
    let make = |x: &[f64], v: [f64; 2]| -> ProductPoint {
        let mut c = x.to_vec();
        c.push(base[xl] + v[0]);
        c.push(base[xl + 1] + v[1]);
        ProductPoint(c)
    };
    for j in 0..layers {
        let stage = j / m;
        let tau = (j - stage * m) as f64 / m as f64;
        for i in 0..nv {
            let p = gamma.image(i).coords();
            let x = &p[..xl];
            let v = plane(p);
            let nv_ = norm(v);
            let dir = [v[0] / nv_, v[1] / nv_];
            let scaled = |s: f64| [s * dir[0], s * dir[1]];
            images.push(match stage {
                0 => make(x, scaled((1.0 - tau) * nv_ + tau * 3.0 * r)),
                1 => make(&x_space.geodesic_raw(x, x0, tau), scaled(3.0 * r)),
                2 => make(&x_space.geodesic_raw(x0, &x1, tau), scaled(3.0 * r)),
                _ => make(&x1, scaled((1.0 - tau) * 3.0 * r)),
            });
        }
    }
    let apex = make(&x1, [0.0, 0.0]);
    images.push(apex.clone());
    let filling = ManifoldMap::new(space.clone(), complex, images)?.with_quadrature_order(gamma.quadrature_order())?;

    let per = filling.volume_report().per_simplex;
    let mut stage_areas = [0.0; 4];
    for (s, vol) in filling.complex().simplices().iter().zip(per) {
        let ring = s.iter().map(|&v| v / nv).min().unwrap();
        stage_areas[(ring / m).min(3)] += vol;
    }
    let area = stage_areas.iter().sum();
    Ok(PulloffFilling { filling, stage_areas, area, budget: 35.0 * a * r.powi(3), apex })
}
