//! Horospherical coordinates on a hyperbolic factor.
//!
//! Relative to an oriented unit-speed geodesic `g`, a point of `H^m` gets
//! coordinates `(u, s)` with `u` in `R^{m-1}` and `s` real: `s` is minus the
//! Busemann function of the forward endpoint `g(+inf)` (normalised so that
//! `g(t)` has `s = t`) and `u` is the horizontal position on the horosphere,
//! scaled so that the metric reads `ds^2 + e^{-2s} |du|^2`.

use crate::error::{domain, structural};
use crate::Result;

use super::hyperboloid::{mdot, normalize};
use super::HypPoint;

/// Oriented unit-speed geodesic `t -> cosh t * origin + sinh t * direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypGeodesic {
    origin: Vec<f64>,
    direction: Vec<f64>,
    /// Minkowski orthonormal frame: origin, direction, then spatial completion.
    frame: Vec<Vec<f64>>,
}

impl HypGeodesic {
    pub fn new(origin: &HypPoint, direction: &[f64]) -> Result<Self> {
        let o = origin.coords();
        if direction.len() != o.len() {
            return Err(structural("direction and origin differ in length"));
        }
        if mdot(o, direction).abs() > 1e-9 {
            return Err(domain("direction is not tangent at the origin"));
        }
        let n = mdot(direction, direction);
        if (n - 1.0).abs() > 1e-9 {
            return Err(domain("direction is not a unit vector"));
        }
        let m = o.len() - 1;
        let mut frame = vec![o.to_vec(), direction.to_vec()];
        for j in 1..=m {
            if frame.len() == m + 1 {
                break;
            }
            let mut v = vec![0.0; m + 1];
            v[j] = 1.0;
            for _ in 0..2 {
                for (l, c) in frame.iter().enumerate() {
                    let eta = if l == 0 { -1.0 } else { 1.0 };
                    let a = eta * mdot(&v, c);
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi -= a * ci;
                    }
                }
            }
            let nv = mdot(&v, &v);
            if nv > 0.25 {
                let s = nv.sqrt();
                v.iter_mut().for_each(|x| *x /= s);
                frame.push(v);
            }
        }
        Ok(HypGeodesic { origin: o.to_vec(), direction: direction.to_vec(), frame })
    }

    /// The geodesic through the origin of `H^m` along the `j`-th spatial axis
    /// (`j` counted from 1), oriented towards positive coordinates.
    pub fn axis(m: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= m, "axis index out of range");
        let mut d = vec![0.0; m + 1];
        d[j] = 1.0;
        HypGeodesic::new(&HypPoint::origin(m), &d).expect("coordinate axis is a geodesic")
    }

    /// Same geodesic with the opposite orientation.
    pub fn reversed(&self) -> Self {
        let d: Vec<f64> = self.direction.iter().map(|v| -v).collect();
        HypGeodesic::new(&HypPoint(self.origin.clone()), &d).expect("reversal stays valid")
    }

    pub fn dim(&self) -> usize {
        self.origin.len() - 1
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let (c, s) = (t.cosh(), t.sinh());
        let mut x: Vec<f64> = self.origin.iter().zip(&self.direction).map(|(o, d)| c * o + s * d).collect();
        normalize(&mut x);
        x
    }

    fn frame_coords(&self, x: &[f64]) -> Vec<f64> {
        self.frame
            .iter()
            .enumerate()
            .map(|(l, c)| if l == 0 { -mdot(x, c) } else { mdot(x, c) })
            .collect()
    }
}

/// Horospherical coordinates `(u, s)` of a point relative to a geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct HoroCoords {
    pub u: Vec<f64>,
    pub s: f64,
}

/// Raw-coordinate version of [`to_horospherical`].
pub fn to_horo_raw(x: &[f64], g: &HypGeodesic) -> HoroCoords {
    let y = g.frame_coords(x);
    let tail: f64 = y[2..].iter().map(|v| v * v).sum();
    // y0 - y1 without cancellation: (y0 - y1)(y0 + y1) = 1 + |y_tail|^2
    let w = (1.0 + tail) / (y[0] + y[1]);
    HoroCoords { u: y[2..].iter().map(|v| v / w).collect(), s: -w.ln() }
}

/// Raw-coordinate version of [`from_horospherical`]; `h.u` must have length `m - 1`.
pub fn from_horo_raw(h: &HoroCoords, g: &HypGeodesic) -> Vec<f64> {
    let m = g.dim();
    let e = (-h.s).exp();
    let u2: f64 = h.u.iter().map(|v| v * v).sum();
    let mut y = vec![0.0; m + 1];
    y[0] = h.s.cosh() + 0.5 * u2 * e;
    y[1] = h.s.sinh() + 0.5 * u2 * e;
    for (j, uj) in h.u.iter().enumerate() {
        y[j + 2] = uj * e;
    }
    let mut x = vec![0.0; m + 1];
    for (yl, c) in y.iter().zip(&g.frame) {
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi += yl * ci;
        }
    }
    normalize(&mut x);
    x
}

pub fn to_horospherical(x: &HypPoint, g: &HypGeodesic) -> Result<HoroCoords> {
    if x.dim() != g.dim() {
        return Err(structural("point and geodesic live in different dimensions"));
    }
    Ok(to_horo_raw(x.coords(), g))
}

pub fn from_horospherical(h: &HoroCoords, g: &HypGeodesic) -> Result<HypPoint> {
    if h.u.len() + 1 != g.dim() {
        return Err(structural("horizontal coordinate has the wrong length"));
    }
    if !h.s.is_finite() || h.u.iter().any(|v| !v.is_finite()) {
        return Err(domain("non-finite horospherical coordinate"));
    }
    Ok(HypPoint(from_horo_raw(h, g)))
}

/// Busemann function of the forward endpoint of `g`, normalised to vanish at `g(0)`.
pub fn busemann(x: &[f64], g: &HypGeodesic) -> f64 {
    -to_horo_raw(x, g).s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hyperboloid::dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tilted(m: usize) -> HypGeodesic {
        let o = HypPoint::from_spatial(&(1..=m).map(|i| 0.3 * i as f64 - 0.5).collect::<Vec<_>>());
        // tangent at o: take a boost frame vector
        let f = crate::geometry::hyperboloid::tangent_frame(o.coords());
        let mut d = vec![0.0; m + 1];
        for (i, e) in f.iter().enumerate() {
            for (dj, ej) in d.iter_mut().zip(e) {
                *dj += (0.2 + i as f64) * ej;
            }
        }
        let n = mdot(&d, &d).sqrt();
        d.iter_mut().for_each(|v| *v /= n);
        HypGeodesic::new(&o, &d).unwrap()
    }

    #[test]
    fn axis_points_have_zero_horizontal_part() {
        let g = tilted(3);
        for t in [-3.0, 0.0, 0.7, 5.0] {
            let h = to_horo_raw(&g.point_at(t), &g);
            assert!((h.s - t).abs() < 1e-9);
            assert!(h.u.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn round_trip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [2, 3, 4] {
            let g = tilted(m);
            for _ in 0..1000 {
                let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let x = HypPoint::from_spatial(&xs);
                let h = to_horospherical(&x, &g).unwrap();
                let back = from_horospherical(&h, &g).unwrap();
                assert!(dist(x.coords(), back.coords()) < 1e-9);
            }
        }
    }

    #[test]
    fn equal_s_means_equal_busemann_limit() {
        let g = HypGeodesic::axis(2, 1);
        let a = from_horo_raw(&HoroCoords { u: vec![1.5], s: 0.4 }, &g);
        let b = from_horo_raw(&HoroCoords { u: vec![-0.7], s: 0.4 }, &g);
        let far = 30.0;
        let ba = dist(&a, &g.point_at(far)) - far;
        let bb = dist(&b, &g.point_at(far)) - far;
        assert!((ba - bb).abs() < 1e-9);
        assert!((ba - busemann(&a, &g)).abs() < 1e-9);
    }

    #[test]
    fn metric_is_warped_product() {
        // moving u by du at level s costs e^{-s}|du| to first order
        let g = HypGeodesic::axis(2, 1);
        for s in [-1.0, 0.0, 2.0] {
            let h = 1e-6;
            let a = from_horo_raw(&HoroCoords { u: vec![0.3], s }, &g);
            let b = from_horo_raw(&HoroCoords { u: vec![0.3 + h], s }, &g);
            assert!((dist(&a, &b) / h - (-s as f64).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn reversed_geodesic_flips_vertical() {
        let g = tilted(2);
        let r = g.reversed();
        let x = g.point_at(1.25);
        assert!((to_horo_raw(&x, &r).s + 1.25).abs() < 1e-9);
    }
}
