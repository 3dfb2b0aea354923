//! Reference complexes: triangulated spheres, balls and cylinders.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::structural;
use crate::linalg::det;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    /// Closed triangulation of the unit sphere `S^k` in `R^{k+1}`.
    Sphere,
    /// Triangulation of the unit ball `B^k` in `R^k`.
    Ball,
    /// `S^1 x [0, 1]`, reference coordinates `(cos a, sin a, t)`.
    Cylinder,
}

/// A pure simplicial complex with reference coordinates.
///
/// `dim` is the dimension of the top simplices. Balls built by
/// [`layered_cone`] keep the vertex layout `ring * V + i` (ring 0 is the
/// boundary sphere, whose vertex `i` is vertex `i` of the sphere complex)
/// with the apex last.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    dim: usize,
    kind: ComplexKind,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    boundary: Vec<bool>,
}

impl SimplicialComplex {
    pub fn new(
        dim: usize,
        kind: ComplexKind,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        for s in &simplices {
            if s.len() != dim + 1 {
                return Err(structural(format!("simplex {s:?} does not have {} vertices", dim + 1)));
            }
            if s.iter().any(|&v| v >= vertices.len()) {
                return Err(structural(format!("simplex {s:?} references a missing vertex")));
            }
            let distinct: HashSet<_> = s.iter().collect();
            if distinct.len() != s.len() {
                return Err(structural(format!("simplex {s:?} repeats a vertex")));
            }
        }
        let boundary = boundary_flags(dim, vertices.len(), &simplices);
        Ok(SimplicialComplex { dim, kind, vertices, simplices, boundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.boundary[v]).collect()
    }

    /// Distinct edges as sorted pairs, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.simplices {
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let e = (s[i].min(s[j]), s[i].max(s[j]));
                    if seen.insert(e) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }

    /// Codimension-one faces lying on the boundary, as sorted tuples.
    pub fn boundary_faces(&self) -> Vec<Vec<usize>> {
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for s in &self.simplices {
            for f in facets(s) {
                *count.entry(f).or_default() += 1;
            }
        }
        count.into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| f).collect()
    }

    /// Every codimension-one face is shared by exactly two top simplices.
    pub fn is_closed(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in &self.simplices {
            for f in facets(s) {
                *count.entry(f).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Adjacent simplices induce opposite orientations on shared faces.
    pub fn is_consistently_oriented(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        let mut sum: HashMap<Vec<usize>, (i32, usize)> = HashMap::new();
        for s in &self.simplices {
            for i in 0..s.len() {
                let mut f: Vec<usize> = s.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                let mut sign = if i % 2 == 0 { 1 } else { -1 };
                sign *= sort_parity(&mut f);
                let e = sum.entry(f).or_insert((0, 0));
                e.0 += sign;
                e.1 += 1;
            }
        }
        sum.values().all(|&(s, c)| c == 1 || s == 0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut faces: HashSet<Vec<usize>> = HashSet::new();
        for s in &self.simplices {
            let n = s.len();
            for mask in 1u32..(1 << n) {
                let mut f: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect();
                f.sort_unstable();
                faces.insert(f);
            }
        }
        faces.iter().map(|f| if f.len() % 2 == 1 { 1 } else { -1 }).sum()
    }

    /// Euclidean volume of a simplex in reference coordinates.
    pub fn reference_volume(&self, simplex: usize) -> f64 {
        let s = &self.simplices[simplex];
        let k = self.dim;
        if k == 0 {
            return 1.0;
        }
        let v0 = &self.vertices[s[0]];
        let edges: Vec<Vec<f64>> = s[1..]
            .iter()
            .map(|&v| self.vertices[v].iter().zip(v0).map(|(a, b)| a - b).collect())
            .collect();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                g[i * k + j] = edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum();
            }
        }
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        crate::linalg::gram_det(&g, k).sqrt() / fact
    }

    /// Edge-midpoint subdivision of every simplex into `2^k` pieces.
    ///
    /// Returns the refined complex and, for each new vertex (indices from
    /// `num_vertices()` on), the edge whose midpoint it is.
    pub fn subdivide(&self) -> (SimplicialComplex, Vec<(usize, usize)>) {
        let k = self.dim;
        if k == 0 {
            return (self.clone(), Vec::new());
        }
        let template = kuhn_template(k);
        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut simplices = Vec::with_capacity(self.simplices.len() << k);
        for s in &self.simplices {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            for sub in &template {
                let mut out = Vec::with_capacity(k + 1);
                for &(a, b) in sub {
                    let (va, vb) = (sorted[a], sorted[b]);
                    if a == b {
                        out.push(va);
                        continue;
                    }
                    let key = (va.min(vb), va.max(vb));
                    let idx = *mid.entry(key).or_insert_with(|| {
                        let mut c: Vec<f64> = self.vertices[key.0]
                            .iter()
                            .zip(&self.vertices[key.1])
                            .map(|(x, y)| 0.5 * (x + y))
                            .collect();
                        if self.kind == ComplexKind::Sphere {
                            normalize(&mut c);
                        }
                        vertices.push(c);
                        parents.push(key);
                        vertices.len() - 1
                    });
                    out.push(idx);
                }
                simplices.push(out);
            }
        }
        let mut c = SimplicialComplex::new(k, self.kind, vertices, simplices).expect("subdivision is valid");
        c.orient();
        (c, parents)
    }

    /// Reorders each simplex so its reference orientation is positive.
    pub(crate) fn orient(&mut self) {
        let k = self.dim;
        if k == 0 || self.kind == ComplexKind::Cylinder {
            return;
        }
        for s in self.simplices.iter_mut() {
            let rows: Vec<Vec<f64>> = match self.kind {
                ComplexKind::Sphere => s.iter().map(|&v| self.vertices[v].clone()).collect(),
                _ => s[1..]
                    .iter()
                    .map(|&v| self.vertices[v].iter().zip(&self.vertices[s[0]]).map(|(a, b)| a - b).collect())
                    .collect(),
            };
            if rows.len() == rows[0].len() && det(rows) < 0.0 {
                s.swap(0, 1);
            }
        }
    }
}

fn normalize(c: &mut [f64]) {
    let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.iter_mut().for_each(|v| *v /= n);
}

fn facets(s: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..s.len()).map(move |i| {
        let mut f: Vec<usize> = s.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
        f.sort_unstable();
        f
    })
}

fn boundary_flags(dim: usize, n: usize, simplices: &[Vec<usize>]) -> Vec<bool> {
    let mut flags = vec![false; n];
    let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
    for s in simplices {
        for f in facets(s) {
            *count.entry(f).or_default() += 1;
        }
    }
    if dim == 0 {
        return flags;
    }
    for (f, c) in count {
        if c == 1 {
            for v in f {
                flags[v] = true;
            }
        }
    }
    flags
}

/// Sorts in place and returns the parity (+1 / -1) of the permutation used.
fn sort_parity(v: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

/// Subsimplices of the edge-midpoint (Freudenthal) subdivision of a
/// `k`-simplex, each vertex given as the pair of corners it is the midpoint
/// of (equal pair for a corner itself).
pub(crate) fn kuhn_template(k: usize) -> Vec<Vec<(usize, usize)>> {
    // Points y in {0,1,2}^k with 2 >= y1 >= .. >= yk >= 0 correspond to
    // barycentric coordinates ((2 - y1)/2, (y1 - y2)/2, .., yk/2).
    let to_pair = |y: &[i32]| -> (usize, usize) {
        let mut ext = vec![2];
        ext.extend_from_slice(y);
        ext.push(0);
        let mut idx = Vec::new();
        for i in 0..=k {
            let w = ext[i] - ext[i + 1];
            for _ in 0..w {
                idx.push(i);
            }
        }
        (idx[0], idx[1])
    };
    let perms = permutations(k);
    let mut out = Vec::new();
    for corner in 0..(1u32 << k) {
        let c: Vec<i32> = (0..k).map(|i| ((corner >> i) & 1) as i32).collect();
        for p in &perms {
            let mut pts = vec![c.clone()];
            let mut y = c.clone();
            for &axis in p {
                y[axis] += 1;
                pts.push(y.clone());
            }
            let valid = pts.iter().all(|y| y.windows(2).all(|w| w[0] >= w[1]) && y.iter().all(|&v| (0..=2).contains(&v)));
            if valid {
                out.push(pts.iter().map(|y| to_pair(y)).collect());
            }
        }
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Boundary of the `(k+1)`-cross-polytope, subdivided `depth` times, with
/// vertices pushed to the unit sphere.
pub fn triangulate_sphere(k: usize, depth: usize) -> Result<SimplicialComplex> {
    if k > 4 {
        return Err(structural(format!("spheres of dimension {k} are not supported")));
    }
    let n = k + 1;
    let mut vertices = Vec::with_capacity(2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = sign;
            vertices.push(v);
        }
    }
    // one facet per sign pattern: vertex 2i (positive) or 2i+1 (negative)
    let simplices: Vec<Vec<usize>> = (0..(1u32 << n))
        .map(|mask| (0..n).map(|i| 2 * i + ((mask >> i) & 1) as usize).collect())
        .collect();
    let mut c = SimplicialComplex::new(k, ComplexKind::Sphere, vertices, simplices)?;
    c.orient();
    for _ in 0..depth {
        c = c.subdivide().0;
    }
    Ok(c)
}

/// Cone over a sphere complex, split into `layers` concentric shells.
///
/// Ring `j` (for `j < layers`) holds the sphere vertices scaled by
/// `1 - j / layers`; the apex (the origin) is the last vertex.
pub fn layered_cone(sphere: &SimplicialComplex, layers: usize) -> Result<SimplicialComplex> {
    if sphere.kind != ComplexKind::Sphere {
        return Err(structural("layered cone needs a sphere complex"));
    }
    if layers == 0 {
        return Err(structural("at least one layer is needed"));
    }
    let v = sphere.num_vertices();
    let k = sphere.dim;
    let mut vertices = Vec::with_capacity(v * layers + 1);
    for j in 0..layers {
        let scale = 1.0 - j as f64 / layers as f64;
        for p in &sphere.vertices {
            vertices.push(p.iter().map(|x| x * scale).collect());
        }
    }
    vertices.push(vec![0.0; k + 1]);
    let apex = v * layers;
    let mut simplices = Vec::new();
    for s in &sphere.simplices {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        for j in 0..layers {
            let a = |i: usize| j * v + sorted[i];
            if j + 1 == layers {
                let mut t: Vec<usize> = (0..=k).map(a).collect();
                t.push(apex);
                simplices.push(t);
            } else {
                let b = |i: usize| (j + 1) * v + sorted[i];
                for m in 0..=k {
                    let mut t: Vec<usize> = (0..=m).map(a).collect();
                    t.extend((m..=k).map(b));
                    simplices.push(t);
                }
            }
        }
    }
    let mut c = SimplicialComplex::new(k + 1, ComplexKind::Ball, vertices, simplices)?;
    c.orient();
    Ok(c)
}

/// Number of radial layers used by [`triangulate_ball`].
pub const BALL_LAYERS: usize = 4;

/// Ball `B^{k+1}` whose boundary is `triangulate_sphere(k, depth)`.
pub fn triangulate_ball(k_plus_1: usize, depth: usize) -> Result<SimplicialComplex> {
    if k_plus_1 == 0 {
        return Err(structural("balls have positive dimension"));
    }
    layered_cone(&triangulate_sphere(k_plus_1 - 1, depth)?, BALL_LAYERS)
}

/// The cylinder `S^1 x [0, 1]` over a circle complex, with `layers` strips.
/// Vertex `j * V + i` is circle vertex `i` at height `j / layers`.
pub fn triangulate_cylinder(circle: &SimplicialComplex, layers: usize) -> Result<SimplicialComplex> {
    if circle.kind != ComplexKind::Sphere || circle.dim != 1 {
        return Err(structural("cylinder needs a circle complex"));
    }
    if layers == 0 {
        return Err(structural("at least one layer is needed"));
    }
    let v = circle.num_vertices();
    let mut vertices = Vec::with_capacity(v * (layers + 1));
    for j in 0..=layers {
        let t = j as f64 / layers as f64;
        for p in &circle.vertices {
            vertices.push(vec![p[0], p[1], t]);
        }
    }
    let mut simplices = Vec::new();
    for s in &circle.simplices {
        let (a0, a1) = (s[0].min(s[1]), s[0].max(s[1]));
        for j in 0..layers {
            simplices.push(vec![j * v + a0, j * v + a1, (j + 1) * v + a1]);
            simplices.push(vec![j * v + a0, (j + 1) * v + a0, (j + 1) * v + a1]);
        }
    }
    SimplicialComplex::new(2, ComplexKind::Cylinder, vertices, simplices)
}

/// Closed polygon with `n` vertices evenly spaced on the unit circle, edges
/// `(i, i + 1)` in counterclockwise order.
pub fn triangulate_polygon(n: usize) -> Result<SimplicialComplex> {
    if n < 3 {
        return Err(structural("a polygon needs at least three vertices"));
    }
    let vertices = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let simplices = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    let mut c = SimplicialComplex::new(1, ComplexKind::Sphere, vertices, simplices)?;
    c.orient();
    Ok(c)
}

/// Suspension of a sphere complex `S^k` to `S^{k+1}`, with `segments`
/// subdivisions of each meridian.
///
/// Ring `j` (`1 <= j < segments`) holds base vertex `i` at index
/// `(j - 1) * V + i` with reference coordinates `(sin(pi t) p, cos(pi t))`,
/// `t = j / segments`. The north pole (`t = 0`) and south pole (`t = 1`)
/// follow, in that order.
pub fn suspension_complex(base: &SimplicialComplex, segments: usize) -> Result<SimplicialComplex> {
    if base.kind != ComplexKind::Sphere {
        return Err(structural("suspension needs a sphere complex"));
    }
    if segments < 2 {
        return Err(structural("a meridian needs at least two segments"));
    }
    let v = base.num_vertices();
    let k = base.dim;
    let mut vertices = Vec::with_capacity(v * (segments - 1) + 2);
    for j in 1..segments {
        let t = std::f64::consts::PI * j as f64 / segments as f64;
        for p in &base.vertices {
            let mut c: Vec<f64> = p.iter().map(|x| x * t.sin()).collect();
            c.push(t.cos());
            vertices.push(c);
        }
    }
    let north = vertices.len();
    let mut np = vec![0.0; k + 2];
    np[k + 1] = 1.0;
    vertices.push(np);
    let mut sp = vec![0.0; k + 2];
    sp[k + 1] = -1.0;
    vertices.push(sp);
    let south = north + 1;
    let mut simplices = Vec::new();
    for s in &base.simplices {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        let ring = |j: usize, i: usize| (j - 1) * v + sorted[i];
        let mut top: Vec<usize> = vec![north];
        top.extend((0..=k).map(|i| ring(1, i)));
        simplices.push(top);
        for j in 1..segments - 1 {
            for m in 0..=k {
                let mut t: Vec<usize> = (0..=m).map(|i| ring(j, i)).collect();
                t.extend((m..=k).map(|i| ring(j + 1, i)));
                simplices.push(t);
            }
        }
        let mut bottom: Vec<usize> = (0..=k).map(|i| ring(segments - 1, i)).collect();
        bottom.push(south);
        simplices.push(bottom);
    }
    let mut c = SimplicialComplex::new(k + 1, ComplexKind::Sphere, vertices, simplices)?;
    c.orient();
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_sizes() {
        for k in 1..=4 {
            assert_eq!(kuhn_template(k).len(), 1 << k);
        }
    }

    #[test]
    fn sphere_counts() {
        let c = triangulate_sphere(1, 0).unwrap();
        assert_eq!((c.num_vertices(), c.simplices().len()), (4, 4));
        assert_eq!(triangulate_sphere(1, 3).unwrap().simplices().len(), 32);
        for k in 1..=3 {
            for d in 0..=2 {
                let c = triangulate_sphere(k, d).unwrap();
                assert_eq!(c.simplices().len(), (1 << (k + 1)) * (1 << (k * d)));
            }
        }
        assert!(triangulate_sphere(5, 0).is_err());
    }

    #[test]
    fn spheres_are_closed_oriented_with_right_euler() {
        for k in 1..=3 {
            let c = triangulate_sphere(k, 2).unwrap();
            assert!(c.is_closed());
            assert!(c.is_consistently_oriented(), "k = {k}");
            let want = if k % 2 == 0 { 2 } else { 0 };
            assert_eq!(c.euler_characteristic(), want);
            for p in c.vertices() {
                let n: f64 = p.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn balls_have_sphere_boundary() {
        for k1 in 1..=3 {
            let b = triangulate_ball(k1, 1).unwrap();
            let s = triangulate_sphere(k1 - 1, 1).unwrap();
            assert_eq!(b.euler_characteristic(), 1);
            assert!(b.is_consistently_oriented());
            assert_eq!(b.boundary_vertices(), (0..s.num_vertices()).collect::<Vec<_>>());
            if k1 > 1 {
                let mut want: Vec<Vec<usize>> = s
                    .simplices()
                    .iter()
                    .map(|f| {
                        let mut f = f.clone();
                        f.sort_unstable();
                        f
                    })
                    .collect();
                want.sort();
                assert_eq!(b.boundary_faces(), want);
            }
        }
        let b1 = triangulate_ball(1, 0).unwrap();
        assert!(b1.num_vertices() - 2 >= 3);
    }

    #[test]
    fn polygons_and_suspensions_are_spheres() {
        let p = triangulate_polygon(7).unwrap();
        assert!(p.is_closed() && p.is_consistently_oriented());
        for k in 0..=2 {
            let s = suspension_complex(&triangulate_sphere(k, 1).unwrap(), 4).unwrap();
            assert_eq!(s.dim(), k + 1);
            assert!(s.is_closed());
            assert!(s.is_consistently_oriented());
            let want = if (k + 1) % 2 == 0 { 2 } else { 0 };
            assert_eq!(s.euler_characteristic(), want);
        }
    }

    #[test]
    fn cylinder_is_an_annulus() {
        let c = triangulate_cylinder(&triangulate_sphere(1, 2).unwrap(), 3).unwrap();
        assert_eq!(c.euler_characteristic(), 0);
        assert_eq!(c.boundary_vertices().len(), 32);
    }

    #[test]
    fn subdivision_keeps_reference_volume_of_ball() {
        let b = triangulate_ball(2, 1).unwrap();
        let total: f64 = (0..b.simplices().len()).map(|i| b.reference_volume(i)).sum();
        let (r, parents) = b.subdivide();
        let total2: f64 = (0..r.simplices().len()).map(|i| r.reference_volume(i)).sum();
        assert!((total - total2).abs() < 1e-12);
        assert_eq!(parents.len(), r.num_vertices() - b.num_vertices());
        assert!(r.is_consistently_oriented());
    }
}
