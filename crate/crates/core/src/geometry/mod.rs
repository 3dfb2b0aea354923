//! Metric geometry of finite products of hyperbolic and Euclidean spaces.
//!
//! Hyperbolic factors are stored in the hyperboloid model, so a factor of
//! dimension `m` occupies `m + 1` coordinates of a [`ProductPoint`]. The
//! product carries the usual product metric: the distance is the Euclidean
//! norm of the vector of factor distances.

pub mod horo;
pub mod hyperboloid;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural};
use crate::Result;

pub use horo::{busemann, from_horospherical, to_horospherical, HoroCoords, HypGeodesic};

/// Tolerance for the hyperboloid constraint of stored points.
pub const POINT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Hyperbolic,
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub dim: usize,
}

impl Factor {
    pub fn hyperbolic(dim: usize) -> Self {
        Factor { kind: FactorKind::Hyperbolic, dim }
    }

    pub fn euclidean(dim: usize) -> Self {
        Factor { kind: FactorKind::Euclidean, dim }
    }

    /// Number of stored coordinates.
    pub fn coord_len(&self) -> usize {
        match self.kind {
            FactorKind::Hyperbolic => self.dim + 1,
            FactorKind::Euclidean => self.dim,
        }
    }
}

/// A point of `H^m` in hyperboloid coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HypPoint(Vec<f64>);

impl HypPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(structural("hyperboloid point needs at least two coordinates"));
        }
        check_hyperboloid(&coords)?;
        Ok(HypPoint(coords))
    }

    /// The origin `(1, 0, .., 0)` of `H^m`.
    pub fn origin(m: usize) -> Self {
        let mut c = vec![0.0; m + 1];
        c[0] = 1.0;
        HypPoint(c)
    }

    /// Builds a point from its spatial part, which is always valid.
    pub fn from_spatial(xs: &[f64]) -> Self {
        let mut c = Vec::with_capacity(xs.len() + 1);
        c.push(0.0);
        c.extend_from_slice(xs);
        hyperboloid::normalize(&mut c);
        HypPoint(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }
}

fn check_hyperboloid(x: &[f64]) -> Result<()> {
    let q = hyperboloid::mdot(x, x);
    let scale = 1.0 + x[0] * x[0];
    if !q.is_finite() || (q + 1.0).abs() > POINT_TOL * scale || x[0] < 1.0 - POINT_TOL {
        return Err(domain(format!(
            "not on the hyperboloid: <x,x> = {q}, x0 = {}",
            x[0]
        )));
    }
    Ok(())
}

/// A point of a [`ModelSpace`], stored as one flat coordinate vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint(pub Vec<f64>);

impl ProductPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Finite product of hyperbolic and Euclidean factors with a basepoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpace {
    factors: Vec<Factor>,
    offsets: Vec<usize>,
    basepoint: ProductPoint,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    factors: Vec<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basepoint: Option<Vec<Vec<f64>>>,
}

impl Serialize for ModelSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let default = ModelSpace::new(self.factors.clone()).expect("valid factors");
        let basepoint = (default.basepoint != self.basepoint).then(|| self.to_nested(&self.basepoint));
        SpaceRepr { factors: self.factors.clone(), basepoint }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SpaceRepr::deserialize(d)?;
        let mut space = ModelSpace::new(repr.factors).map_err(D::Error::custom)?;
        if let Some(b) = repr.basepoint {
            let p = space.from_nested(&b).map_err(D::Error::custom)?;
            space = space.with_basepoint(p).map_err(D::Error::custom)?;
        }
        Ok(space)
    }
}

impl ModelSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(structural("a model space needs at least one factor"));
        }
        let mut offsets = Vec::with_capacity(factors.len() + 1);
        let mut base = Vec::new();
        offsets.push(0);
        for f in &factors {
            if f.dim == 0 {
                return Err(structural("factor dimension must be positive"));
            }
            if f.kind == FactorKind::Hyperbolic {
                base.push(1.0);
                base.extend(std::iter::repeat(0.0).take(f.dim));
            } else {
                base.extend(std::iter::repeat(0.0).take(f.dim));
            }
            offsets.push(base.len());
        }
        Ok(ModelSpace { factors, offsets, basepoint: ProductPoint(base) })
    }

    /// `H^{m_1} x .. x H^{m_k}`.
    pub fn hyperbolic_product(dims: &[usize]) -> Result<Self> {
        ModelSpace::new(dims.iter().map(|&d| Factor::hyperbolic(d)).collect())
    }

    pub fn with_basepoint(mut self, p: ProductPoint) -> Result<Self> {
        self.validate(&p)?;
        self.basepoint = p;
        Ok(self)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn basepoint(&self) -> &ProductPoint {
        &self.basepoint
    }

    /// Total manifold dimension `n`.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).sum()
    }

    /// Length of the stored coordinate vector.
    pub fn coord_len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn factor_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn is_hyperbolic_product(&self) -> bool {
        self.factors.iter().all(|f| f.kind == FactorKind::Hyperbolic)
    }

    /// Checks arity, finiteness and the hyperboloid constraint.
    pub fn validate(&self, p: &ProductPoint) -> Result<()> {
        if p.0.len() != self.coord_len() {
            return Err(structural(format!(
                "point has {} coordinates, space expects {}",
                p.0.len(),
                self.coord_len()
            )));
        }
        if p.0.iter().any(|v| !v.is_finite()) {
            return Err(domain("non-finite coordinate"));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if f.kind == FactorKind::Hyperbolic {
                check_hyperboloid(&p.0[self.factor_range(i)])?;
            }
        }
        Ok(())
    }

    /// Assembles a point from per-factor parts.
    pub fn from_nested(&self, parts: &[Vec<f64>]) -> Result<ProductPoint> {
        if parts.len() != self.factors.len() {
            return Err(structural("wrong number of factor parts"));
        }
        let mut c = Vec::with_capacity(self.coord_len());
        for (part, f) in parts.iter().zip(&self.factors) {
            if part.len() != f.coord_len() {
                return Err(structural("factor part has the wrong length"));
            }
            c.extend_from_slice(part);
        }
        let p = ProductPoint(c);
        self.validate(&p)?;
        Ok(p)
    }

    pub fn to_nested(&self, p: &ProductPoint) -> Vec<Vec<f64>> {
        (0..self.factors.len()).map(|i| p.0[self.factor_range(i)].to_vec()).collect()
    }

    /// Factor-wise distances without validation.
    pub fn factor_dists(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        (0..self.factors.len()).map(|i| self.factor_dist(i, p, q)).collect()
    }

    #[inline]
    pub fn factor_dist(&self, i: usize, p: &[f64], q: &[f64]) -> f64 {
        let r = self.factor_range(i);
        match self.factors[i].kind {
            FactorKind::Hyperbolic => hyperboloid::dist(&p[r.clone()], &q[r]),
            FactorKind::Euclidean => {
                p[r.clone()].iter().zip(&q[r]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
        }
    }

    /// Product distance on raw coordinates, no validation.
    #[inline]
    pub fn dist_raw(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.factors.len() {
            let d = self.factor_dist(i, p, q);
            s += d * d;
        }
        s.sqrt()
    }

    pub fn dist(&self, p: &ProductPoint, q: &ProductPoint) -> Result<f64> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(self.dist_raw(&p.0, &q.0))
    }

    /// Distance from the basepoint.
    pub fn norm(&self, p: &[f64]) -> f64 {
        self.dist_raw(&self.basepoint.0, p)
    }

    /// Point at parameter `t` of the geodesic line through `p` and `q`; any
    /// real `t` extrapolates along the line.
    pub fn geodesic_into(&self, p: &[f64], q: &[f64], t: f64, out: &mut [f64]) {
        for (i, f) in self.factors.iter().enumerate() {
            let r = self.factor_range(i);
            match f.kind {
                FactorKind::Hyperbolic => {
                    hyperboloid::geodesic_into(&p[r.clone()], &q[r.clone()], t, &mut out[r])
                }
                FactorKind::Euclidean => {
                    for j in r {
                        out[j] = (1.0 - t) * p[j] + t * q[j];
                    }
                }
            }
        }
    }

    pub fn geodesic_raw(&self, p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        self.geodesic_into(p, q, t, &mut out);
        out
    }

    pub fn geodesic_point(&self, p: &ProductPoint, q: &ProductPoint, t: f64) -> Result<ProductPoint> {
        self.validate(p)?;
        self.validate(q)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("geodesic parameter {t} outside [0, 1]")));
        }
        Ok(ProductPoint(self.geodesic_raw(&p.0, &q.0, t)))
    }

    /// Radial projection onto `S(r)` without validation; `None` at the basepoint.
    pub fn radial_project_raw(&self, p: &[f64], r: f64) -> Option<Vec<f64>> {
        let d = self.norm(p);
        if d < 1e-12 {
            return None;
        }
        Some(self.geodesic_raw(&self.basepoint.0, p, r / d))
    }

    pub fn radial_project(&self, p: &ProductPoint, r: f64) -> Result<ProductPoint> {
        self.validate(p)?;
        if !(r > 0.0) {
            return Err(domain("projection radius must be positive"));
        }
        self.radial_project_raw(&p.0, r)
            .map(ProductPoint)
            .ok_or_else(|| domain("radial projection of the basepoint is undefined"))
    }

    /// Orthonormal basis of the tangent space at `x`, each vector in ambient
    /// coordinates of length `coord_len`.
    pub fn tangent_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.coord_len();
        let mut frame = Vec::with_capacity(self.dim());
        for (i, f) in self.factors.iter().enumerate() {
            let r = self.factor_range(i);
            match f.kind {
                FactorKind::Hyperbolic => {
                    for w in hyperboloid::tangent_frame(&x[r.clone()]) {
                        let mut v = vec![0.0; n];
                        v[r.clone()].copy_from_slice(&w);
                        frame.push(v);
                    }
                }
                FactorKind::Euclidean => {
                    for j in r {
                        let mut v = vec![0.0; n];
                        v[j] = 1.0;
                        frame.push(v);
                    }
                }
            }
        }
        frame
    }

    /// Exponential map at `x` of a tangent vector given in ambient coordinates.
    pub fn exp_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        for (i, f) in self.factors.iter().enumerate() {
            let r = self.factor_range(i);
            match f.kind {
                FactorKind::Hyperbolic => {
                    hyperboloid::exp_into(&x[r.clone()], &v[r.clone()], &mut out[r])
                }
                FactorKind::Euclidean => {
                    for j in r {
                        out[j] = x[j] + v[j];
                    }
                }
            }
        }
    }

    /// Logarithm map at `x`, in ambient coordinates.
    pub fn log(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, f) in self.factors.iter().enumerate() {
            let r = self.factor_range(i);
            match f.kind {
                FactorKind::Hyperbolic => {
                    out[r.clone()].copy_from_slice(&hyperboloid::log(&x[r.clone()], &y[r]))
                }
                FactorKind::Euclidean => {
                    for j in r {
                        out[j] = y[j] - x[j];
                    }
                }
            }
        }
        out
    }

    /// Exponential map at `x` of `sum_i c_i e_i` for the frame `e_i` at `x`.
    pub fn exp_frame(&self, x: &[f64], frame: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; x.len()];
        for (e, ci) in frame.iter().zip(c) {
            for (vj, ej) in v.iter_mut().zip(e) {
                *vj += ci * ej;
            }
        }
        let mut out = vec![0.0; x.len()];
        self.exp_into(x, &v, &mut out);
        out
    }

    /// `count` points on `S(r)`: uniform unit directions at the basepoint
    /// pushed out by the exponential map.
    pub fn sphere_sample(&self, r: f64, seed: u64, count: usize) -> Vec<ProductPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = &self.basepoint.0;
        let frame = self.tangent_frame(base);
        (0..count)
            .map(|_| {
                let c: Vec<f64> = loop {
                    let c: Vec<f64> =
                        (0..frame.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 1e-12 {
                        break c.iter().map(|v| v * r / n).collect();
                    }
                };
                ProductPoint(self.exp_frame(base, &frame, &c))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h2() -> ModelSpace {
        ModelSpace::hyperbolic_product(&[2]).unwrap()
    }

    fn axis_pt(t: f64) -> ProductPoint {
        ProductPoint(vec![t.cosh(), t.sinh(), 0.0])
    }

    #[test]
    fn distance_examples() {
        let s = h2();
        assert_abs_diff_eq!(s.dist(&axis_pt(0.0), &axis_pt(2.0)).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(s.dist(&axis_pt(1.3), &axis_pt(1.3)).unwrap(), 0.0);

        let hh = ModelSpace::hyperbolic_product(&[2, 2]).unwrap();
        let p = hh.basepoint().clone();
        let q = ProductPoint(vec![3f64.cosh(), 3f64.sinh(), 0.0, 4f64.cosh(), 0.0, 4f64.sinh()]);
        assert_abs_diff_eq!(hh.dist(&p, &q).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_points_are_rejected() {
        let s = h2();
        let bad = ProductPoint(vec![1.0, 1.0, 0.0]);
        assert!(matches!(s.dist(&bad, &axis_pt(0.0)), Err(crate::Error::Domain(_))));
        let short = ProductPoint(vec![1.0, 0.0]);
        assert!(matches!(s.dist(&short, &axis_pt(0.0)), Err(crate::Error::Structural(_))));
    }

    #[test]
    fn geodesic_examples() {
        let s = h2();
        let (p, q) = (axis_pt(0.0), axis_pt(2.0));
        assert_eq!(s.geodesic_point(&p, &q, 0.0).unwrap().0, p.0);
        let m = s.geodesic_point(&p, &q, 0.5).unwrap();
        assert_abs_diff_eq!(m.0[0], 1f64.cosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.0[1], 1f64.sinh(), epsilon = 1e-12);
        assert!(s.geodesic_point(&p, &q, 1.5).is_err());

        let hr = ModelSpace::new(vec![Factor::hyperbolic(2), Factor::euclidean(1)]).unwrap();
        let a = ProductPoint(vec![1.0, 0.0, 0.0, -1.0]);
        let b = hr.from_nested(&[HypPoint::from_spatial(&[0.4, -2.0]).into_coords(), vec![3.0]]).unwrap();
        let mid = hr.geodesic_point(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(hr.dist(&a, &mid).unwrap(), hr.dist(&mid, &b).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn radial_projection_examples() {
        let s = h2();
        let p = ProductPoint(HypPoint::from_spatial(&[3.0, -5.0]).into_coords());
        let r = 0.5 * s.norm(&p.0);
        let q = s.radial_project(&p, r).unwrap();
        assert_abs_diff_eq!(s.norm(&q.0), r, epsilon = 1e-9);
        // same ray: q lies on the segment from the basepoint to p
        assert_abs_diff_eq!(s.dist_raw(&q.0, &p.0), r, epsilon = 1e-9);
        let q2 = s.radial_project(&q, r).unwrap();
        assert_abs_diff_eq!(s.dist_raw(&q.0, &q2.0), 0.0, epsilon = 1e-9);
        assert!(s.radial_project(s.basepoint(), 1.0).is_err());
    }

    #[test]
    fn sphere_samples_are_on_the_sphere_and_reproducible() {
        let s = ModelSpace::new(vec![Factor::hyperbolic(3), Factor::euclidean(2)]).unwrap();
        let a = s.sphere_sample(2.5, 7, 50);
        let b = s.sphere_sample(2.5, 7, 50);
        assert_eq!(a, b);
        for p in &a {
            s.validate(p).unwrap();
            assert!((s.norm(&p.0) - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_chord_on_unit_circle_matches_quadrature() {
        // Two independent uniform points on S(1) in H^2: the chord length at
        // angle theta is acosh(cosh^2 1 - sinh^2 1 cos theta).
        let s = h2();
        let pts = s.sphere_sample(1.0, 11, 4000);
        let mut sum = 0.0;
        let mut n = 0;
        for pair in pts.chunks(2) {
            sum += s.dist_raw(&pair[0].0, &pair[1].0);
            n += 1;
        }
        let mc = sum / n as f64;
        let steps = 20_000;
        let (c, sh) = (1f64.cosh(), 1f64.sinh());
        let mut quad = 0.0;
        for i in 0..steps {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / steps as f64;
            quad += (c * c - sh * sh * th.cos()).acosh();
        }
        quad /= steps as f64;
        assert!((mc - quad).abs() < 0.02 * quad, "{mc} vs {quad}");
    }

    #[test]
    fn space_json_round_trip() {
        let s = ModelSpace::new(vec![Factor::hyperbolic(2), Factor::euclidean(2)]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"factors":[{"kind":"hyperbolic","dim":2},{"kind":"euclidean","dim":2}]}"#);
        let back: ModelSpace = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
