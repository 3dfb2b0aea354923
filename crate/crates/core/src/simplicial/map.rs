//! Piecewise-geodesic maps from reference complexes into a model space.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::complex::{kuhn_template, ComplexKind, SimplicialComplex};
use crate::error::{domain, structural};
use crate::geometry::{FactorKind, ModelSpace, ProductPoint};
use crate::Result;

/// Step of the forward differences in barycentric directions.
pub const FD_STEP: f64 = 1e-5;

/// Relative tolerance for vertex images to count as lying on `S(r)`.
pub const SPHERE_TOL: f64 = 1e-6;

/// Relative tolerance of the filling constraint `d(x0, x) >= rho r`.
pub const FILLING_TOL: f64 = 1e-9;

/// A map from a reference complex into a [`ModelSpace`], determined by its
/// vertex images and extended over each simplex by iterated geodesic coning
/// in increasing global vertex order.
#[derive(Clone, Debug)]
pub struct ManifoldMap {
    space: ModelSpace,
    complex: SimplicialComplex,
    images: Vec<ProductPoint>,
    quadrature_order: usize,
    sorted: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Sphere,
    Filling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub volume: f64,
    /// Smallest distance from the basepoint over the vertex images.
    pub min_radius: f64,
    /// Smallest distance from the basepoint over vertices, edge midpoints and
    /// quadrature nodes. Geodesic chords sag inside spheres, so this can sit
    /// below `min_radius`.
    pub sampled_min_radius: f64,
    /// Largest `|d(x0, f(v)) - r|` over vertices.
    pub max_sphere_deviation: f64,
    pub lipschitz_estimate: f64,
    pub sphere_admissible: bool,
    pub filling_admissible: bool,
    pub degenerate_simplices: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeReport {
    pub total: f64,
    pub per_simplex: Vec<f64>,
    /// Simplices with zero reference volume; they contribute nothing.
    pub degenerate: Vec<usize>,
}

impl ManifoldMap {
    pub fn new(space: ModelSpace, complex: SimplicialComplex, images: Vec<ProductPoint>) -> Result<Self> {
        if images.len() != complex.num_vertices() {
            return Err(structural(format!(
                "{} images for {} vertices",
                images.len(),
                complex.num_vertices()
            )));
        }
        for p in &images {
            space.validate(p)?;
        }
        Ok(Self::new_unchecked(space, complex, images))
    }

    pub(crate) fn new_unchecked(space: ModelSpace, complex: SimplicialComplex, images: Vec<ProductPoint>) -> Self {
        let sorted = complex
            .simplices()
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s
            })
            .collect();
        ManifoldMap { space, complex, images, quadrature_order: 2, sorted }
    }

    /// Builds a map by evaluating `f` at the reference coordinates of each vertex.
    pub fn from_fn(
        space: ModelSpace,
        complex: SimplicialComplex,
        mut f: impl FnMut(&[f64]) -> ProductPoint,
    ) -> Result<Self> {
        let images = complex.vertices().iter().map(|v| f(v)).collect();
        Self::new(space, complex, images)
    }

    pub fn with_quadrature_order(mut self, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(structural("quadrature order must be at least 1"));
        }
        self.quadrature_order = q;
        Ok(self)
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn images(&self) -> &[ProductPoint] {
        &self.images
    }

    pub fn image(&self, v: usize) -> &ProductPoint {
        &self.images[v]
    }

    pub(crate) fn set_image(&mut self, v: usize, p: Vec<f64>) {
        self.images[v].0 = p;
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn dim(&self) -> usize {
        self.complex.dim()
    }

    /// Vertices of simplex `i` in increasing global index order.
    pub fn sorted_simplex(&self, i: usize) -> &[usize] {
        &self.sorted[i]
    }

    /// Evaluates the map on simplex `simplex_index` at barycentric coordinates
    /// given in the simplex's stored vertex order.
    pub fn map_eval(&self, simplex_index: usize, bary: &[f64]) -> Result<ProductPoint> {
        let s = self
            .complex
            .simplices()
            .get(simplex_index)
            .ok_or_else(|| structural(format!("no simplex {simplex_index}")))?;
        if bary.len() != s.len() {
            return Err(domain("barycentric coordinates have the wrong length"));
        }
        if bary.iter().any(|&b| !(b >= -1e-12)) || (bary.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(domain("barycentric coordinates must be nonnegative and sum to 1"));
        }
        let sorted = &self.sorted[simplex_index];
        let b: Vec<f64> = sorted
            .iter()
            .map(|v| bary[s.iter().position(|w| w == v).unwrap()].max(0.0))
            .collect();
        let imgs: Vec<&[f64]> = sorted.iter().map(|&v| self.images[v].coords()).collect();
        let mut out = vec![0.0; self.space.coord_len()];
        eval_cone(&self.space, &imgs, &b, &mut out);
        Ok(ProductPoint(out))
    }

    /// k-volume of one simplex.
    pub fn simplex_volume(&self, i: usize) -> f64 {
        let imgs: Vec<&[f64]> = self.sorted[i].iter().map(|&v| self.images[v].coords()).collect();
        let nodes = quadrature_nodes(self.dim(), self.quadrature_order);
        simplex_volume_of(&self.space, &imgs, &nodes)
    }

    pub fn volume_report(&self) -> VolumeReport {
        let k = self.dim();
        let nodes = quadrature_nodes(k, self.quadrature_order);
        let n = self.sorted.len();
        let degenerate: Vec<usize> = (0..n).filter(|&i| self.complex.reference_volume(i) < 1e-14).collect();
        let per_simplex: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                if k == 0 || degenerate.binary_search(&i).is_ok() {
                    return 0.0;
                }
                let imgs: Vec<&[f64]> = self.sorted[i].iter().map(|&v| self.images[v].coords()).collect();
                simplex_volume_of(&self.space, &imgs, &nodes)
            })
            .collect();
        VolumeReport { total: pairwise_sum(&per_simplex), per_simplex, degenerate }
    }

    pub fn k_volume(&self) -> f64 {
        self.volume_report().total
    }

    /// Image points used for radius checks: vertices, edge midpoints and
    /// quadrature nodes.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = self.images.iter().map(|p| p.0.clone()).collect();
        for (a, b) in self.complex.edges() {
            pts.push(self.space.geodesic_raw(self.images[a].coords(), self.images[b].coords(), 0.5));
        }
        let k = self.dim();
        if k >= 2 {
            let nodes = quadrature_nodes(k, self.quadrature_order);
            let mut out = vec![0.0; self.space.coord_len()];
            for s in &self.sorted {
                let imgs: Vec<&[f64]> = s.iter().map(|&v| self.images[v].coords()).collect();
                for b in &nodes {
                    eval_cone(&self.space, &imgs, b, &mut out);
                    pts.push(out.clone());
                }
            }
        }
        pts
    }

    /// Edge-midpoint subdivision; new vertex images are geodesic midpoints,
    /// i.e. the map evaluated at the reference midpoints.
    pub fn refine(&self) -> ManifoldMap {
        let (complex, parents) = self.complex.subdivide();
        let mut images = self.images.clone();
        for (a, b) in parents {
            images.push(ProductPoint(self.space.geodesic_raw(
                self.images[a].coords(),
                self.images[b].coords(),
                0.5,
            )));
        }
        let mut m = ManifoldMap::new_unchecked(self.space.clone(), complex, images);
        m.quadrature_order = self.quadrature_order;
        m
    }

    /// Largest ratio of image distance to reference length over all edges.
    pub fn lipschitz_estimate(&self) -> f64 {
        let v = self.complex.vertices();
        self.complex
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let r: f64 = v[a].iter().zip(&v[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                let d = self.space.dist_raw(self.images[a].coords(), self.images[b].coords());
                if r > 0.0 {
                    d / r
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn check_admissible(&self, r: f64, rho: f64, a: f64, role: Role) -> Result<AdmissibilityReport> {
        if !(r > 0.0) || !(rho > 0.0 && rho <= 1.0) || !(a > 0.0) {
            return Err(domain("need r > 0, 0 < rho <= 1 and A > 0"));
        }
        let kind = self.complex.kind();
        match (role, kind) {
            (Role::Sphere, ComplexKind::Sphere) | (Role::Filling, ComplexKind::Ball) => {}
            _ => return Err(structural(format!("{role:?} role does not apply to a {kind:?} complex"))),
        }
        let vol = self.volume_report();
        let radii: Vec<f64> = self.images.iter().map(|p| self.space.norm(p.coords())).collect();
        let min_radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_sphere_deviation = radii.iter().map(|d| (d - r).abs()).fold(0.0, f64::max);
        let sampled_min_radius = self
            .sample_points()
            .iter()
            .map(|p| self.space.norm(p))
            .fold(f64::INFINITY, f64::min);
        let k = self.dim() as i32;
        let scale = r.max(1.0);
        Ok(AdmissibilityReport {
            volume: vol.total,
            min_radius,
            sampled_min_radius,
            max_sphere_deviation,
            lipschitz_estimate: self.lipschitz_estimate(),
            sphere_admissible: vol.total <= a * r.powi(k) * (1.0 + 1e-9)
                && max_sphere_deviation <= SPHERE_TOL * scale,
            filling_admissible: min_radius >= rho * r - FILLING_TOL * scale,
            degenerate_simplices: vol.degenerate.len(),
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "space": self.space,
            "complex": {
                "dim": self.complex.dim(),
                "kind": self.complex.kind(),
                "vertices": self.complex.vertices(),
                "simplices": self.complex.simplices(),
            },
            "images": self.images.iter().map(|p| self.space.to_nested(p)).collect::<Vec<_>>(),
            "quadrature_order": self.quadrature_order,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let space: ModelSpace = serde_json::from_value(v["space"].clone())?;
        let c = &v["complex"];
        let dim: usize = serde_json::from_value(c["dim"].clone())?;
        let kind: ComplexKind = serde_json::from_value(c["kind"].clone())?;
        let vertices: Vec<Vec<f64>> = serde_json::from_value(c["vertices"].clone())?;
        let simplices: Vec<Vec<usize>> = serde_json::from_value(c["simplices"].clone())?;
        let complex = SimplicialComplex::new(dim, kind, vertices, simplices)?;
        let nested: Vec<Vec<Vec<f64>>> = serde_json::from_value(v["images"].clone())?;
        let images = nested.iter().map(|p| space.from_nested(p)).collect::<Result<Vec<_>>>()?;
        let map = ManifoldMap::new(space, complex, images)?;
        match v.get("quadrature_order").and_then(Value::as_u64) {
            Some(q) => map.with_quadrature_order(q as usize),
            None => Ok(map),
        }
    }

    /// Per-simplex volumes as CSV with columns `simplex_index,volume`.
    pub fn write_volume_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["simplex_index", "volume"])?;
        for (i, v) in self.volume_report().per_simplex.iter().enumerate() {
            wtr.write_record([i.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Iterated geodesic coning over images already sorted by global index.
pub(crate) fn eval_cone(space: &ModelSpace, imgs: &[&[f64]], bary: &[f64], out: &mut [f64]) {
    out.copy_from_slice(imgs[0]);
    let mut acc = bary[0];
    let mut tmp = vec![0.0; out.len()];
    for i in 1..imgs.len() {
        acc += bary[i];
        let t = if acc > 0.0 { bary[i] / acc } else { 1.0 };
        if t == 0.0 {
            continue;
        }
        if t == 1.0 {
            out.copy_from_slice(imgs[i]);
            continue;
        }
        space.geodesic_into(out, imgs[i], t, &mut tmp);
        out.copy_from_slice(&tmp);
    }
}

/// Quadrature nodes (barycentric, equal weights) of order `q` on a
/// `k`-simplex: centroids of the `(q - 1)`-fold edge-midpoint subdivision.
pub fn quadrature_nodes(k: usize, q: usize) -> Vec<Vec<f64>> {
    let corners: Vec<Vec<f64>> = (0..=k)
        .map(|i| {
            let mut e = vec![0.0; k + 1];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut simplices = vec![corners];
    if k >= 1 {
        let template = kuhn_template(k);
        for _ in 1..q.max(1) {
            let mut next = Vec::with_capacity(simplices.len() << k);
            for s in &simplices {
                for sub in &template {
                    next.push(
                        sub.iter()
                            .map(|&(a, b)| s[a].iter().zip(&s[b]).map(|(x, y)| 0.5 * (x + y)).collect())
                            .collect(),
                    );
                }
            }
            simplices = next;
        }
    }
    simplices
        .iter()
        .map(|s: &Vec<Vec<f64>>| {
            let mut c = vec![0.0; k + 1];
            for p in s {
                for (ci, pi) in c.iter_mut().zip(p) {
                    *ci += pi / (k + 1) as f64;
                }
            }
            c
        })
        .collect()
}

/// Volume of the coned simplex spanned by `imgs` (sorted by global index).
pub(crate) fn simplex_volume_of(space: &ModelSpace, imgs: &[&[f64]], nodes: &[Vec<f64>]) -> f64 {
    let k = imgs.len() - 1;
    match k {
        0 => 0.0,
        1 => space.dist_raw(imgs[0], imgs[1]),
        _ => {
            let mut fact = 1.0;
            for i in 2..=k {
                fact *= i as f64;
            }
            let sum: f64 = nodes.iter().map(|b| jacobian_factor(space, imgs, b)).sum();
            sum / nodes.len() as f64 / fact
        }
    }
}

/// `sqrt(det J^T G J)` at barycentric point `b` by forward differences.
fn jacobian_factor(space: &ModelSpace, imgs: &[&[f64]], b: &[f64]) -> f64 {
    let k = imgs.len() - 1;
    let n = space.coord_len();
    let h = FD_STEP;
    let mut pts = vec![vec![0.0; n]; k + 1];
    eval_cone(space, imgs, b, &mut pts[0]);
    let mut bb = b.to_vec();
    for i in 1..=k {
        bb.copy_from_slice(b);
        bb[i] += h;
        bb[0] -= h;
        eval_cone(space, imgs, &bb, &mut pts[i]);
    }
    let mut g = vec![0.0; k * k];
    for (fi, f) in space.factors().iter().enumerate() {
        let r = space.factor_range(fi);
        match f.kind {
            FactorKind::Euclidean => {
                for i in 0..k {
                    for j in i..k {
                        let mut s = 0.0;
                        for c in r.clone() {
                            s += (pts[i + 1][c] - pts[0][c]) * (pts[j + 1][c] - pts[0][c]);
                        }
                        g[i * k + j] += s;
                    }
                }
            }
            FactorKind::Hyperbolic => {
                let d0: Vec<f64> = (1..=k).map(|i| space.factor_dist(fi, &pts[0], &pts[i])).collect();
                for i in 0..k {
                    g[i * k + i] += d0[i] * d0[i];
                    for j in i + 1..k {
                        let dij = space.factor_dist(fi, &pts[i + 1], &pts[j + 1]);
                        g[i * k + j] += 0.5 * (d0[i] * d0[i] + d0[j] * d0[j] - dij * dij);
                    }
                }
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = g[i * k + j] / (h * h);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    crate::linalg::gram_det(&g, k).sqrt()
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}
