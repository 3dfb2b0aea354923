//! Slice-level arithmetic on the hyperboloid model of `H^m`.
//!
//! A point is `[x0, x1, .., xm]` with `-x0^2 + x1^2 + .. + xm^2 = -1` and
//! `x0 >= 1`. Distances avoid the naive `acosh(-<p,q>)` whenever the points
//! share a hemisphere, because that form cancels catastrophically for nearby
//! points far from the origin.

/// Minkowski bilinear form.
#[inline]
pub fn mdot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = -a[0] * b[0];
    for i in 1..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Recomputes `x0` from the spatial part so the point sits on the hyperboloid.
#[inline]
pub fn normalize(x: &mut [f64]) {
    let s: f64 = x[1..].iter().map(|v| v * v).sum();
    x[0] = (1.0 + s).sqrt();
}

pub fn constraint_residual(x: &[f64]) -> f64 {
    (mdot(x, x) + 1.0).abs()
}

pub fn dist(p: &[f64], q: &[f64]) -> f64 {
    // the difference form below is not symmetric in rounding; fix an order
    if p.iter().partial_cmp(q.iter()) == Some(std::cmp::Ordering::Greater) {
        return dist(q, p);
    }
    let m = p.len();
    let mut dot_s = 0.0;
    for i in 1..m {
        dot_s += p[i] * q[i];
    }
    let pq = p[0] * q[0];
    let c = pq - dot_s;
    if dot_s < 0.0 && c > 2.0 {
        return c.acosh();
    }
    // 4 sinh^2(d/2) = (4|dp|^2 + |dp ^ sp|^2) / (2 + 2(p0 q0 + ps.qs))
    let mut delta2 = 0.0;
    let mut wedge = 0.0;
    for i in 1..m {
        let di = q[i] - p[i];
        delta2 += di * di;
        for j in i + 1..m {
            // p_i q_j - p_j q_i, written through the differences so that it
            // does not cancel for nearby points far out
            let w = p[i] * (q[j] - p[j]) - p[j] * di;
            wedge += w * w;
        }
    }
    let e = pq + dot_s;
    let msq = (4.0 * delta2 + 4.0 * wedge) / (2.0 + 2.0 * e);
    2.0 * (0.5 * msq.max(0.0).sqrt()).asinh()
}

/// Point at parameter `t` on the geodesic line through `p` (t = 0) and `q`
/// (t = 1). Any real `t` is allowed.
pub fn geodesic_into(p: &[f64], q: &[f64], t: f64, out: &mut [f64]) {
    let d = dist(p, q);
    if d < 1e-12 {
        for i in 0..p.len() {
            out[i] = (1.0 - t) * p[i] + t * q[i];
        }
    } else {
        let s = d.sinh();
        let a = ((1.0 - t) * d).sinh() / s;
        let b = (t * d).sinh() / s;
        for i in 0..p.len() {
            out[i] = a * p[i] + b * q[i];
        }
    }
    normalize(out);
}

/// Exponential map at `x` applied to the tangent vector `v` (ambient coordinates).
pub fn exp_into(x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = tangent_norm(x, v);
    if n < 1e-300 {
        out.copy_from_slice(x);
        return;
    }
    let (c, s) = (n.cosh(), n.sinh() / n);
    for i in 0..x.len() {
        out[i] = c * x[i] + s * v[i];
    }
    normalize(out);
}

/// Length of a tangent vector `v` at `x`. Far from the origin both carry
/// huge coordinates and `<v, v>` cancels catastrophically; eliminating the
/// time component through `<x, v> = 0` gives
/// `|v|^2 = (|v_s|^2 + |x_s ^ v_s|^2) / x_0^2` with no cancellation.
pub fn tangent_norm(x: &[f64], v: &[f64]) -> f64 {
    let m = x.len();
    let mut vv = 0.0;
    let mut wedge = 0.0;
    for i in 1..m {
        vv += v[i] * v[i];
        for j in i + 1..m {
            let w = x[i] * v[j] - x[j] * v[i];
            wedge += w * w;
        }
    }
    ((vv + wedge) / (x[0] * x[0])).sqrt()
}

/// Orthonormal tangent frame at `x`: the image of the standard spatial basis
/// under the boost taking the origin to `x`.
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len() - 1;
    let k = 1.0 + x[0];
    (1..=m)
        .map(|j| {
            let mut w = vec![0.0; m + 1];
            w[0] = x[j];
            for i in 1..=m {
                w[i] = x[j] * x[i] / k;
            }
            w[j] += 1.0;
            w
        })
        .collect()
}

/// Logarithm map: tangent vector at `x` pointing to `y` with length `d(x, y)`.
pub fn log(x: &[f64], y: &[f64]) -> Vec<f64> {
    let d = dist(x, y);
    let c = mdot(x, y);
    let mut u: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi + c * xi).collect();
    let n = tangent_norm(x, &u);
    if n < 1e-300 {
        u.iter_mut().for_each(|v| *v = 0.0);
        return u;
    }
    u.iter_mut().for_each(|v| *v *= d / n);
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(t: f64) -> Vec<f64> {
        vec![t.cosh(), t.sinh(), 0.0]
    }

    #[test]
    fn exp_and_log_are_accurate_far_out() {
        let mut x = vec![20f64.cosh(), 20f64.sinh() * 0.6, 20f64.sinh() * 0.8];
        normalize(&mut x);
        for e in tangent_frame(&x) {
            for len in [1e-5, 0.3, 3.6] {
                let v: Vec<f64> = e.iter().map(|c| c * len).collect();
                let mut y = vec![0.0; 3];
                exp_into(&x, &v, &mut y);
                // coordinates near 2.4e8 resolve angular steps only to ~3e-8
                assert!((dist(&x, &y) - len).abs() < 1e-7, "{len} {}", dist(&x, &y));
                let back = log(&x, &y);
                assert!((tangent_norm(&x, &back) - len).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn axis_distances_are_stable_far_out() {
        for &(a, b) in &[(0.0, 2.0), (40.0, 40.5), (49.9, 50.0), (-30.0, -29.0)] {
            let d = dist(&axis(a), &axis(b));
            assert!((d - (b - a)).abs() < 1e-9, "{a} {b} {d}");
        }
    }

    #[test]
    fn opposite_points_use_acosh_branch() {
        let p = axis(3.0);
        let q = axis(-4.0);
        assert!((dist(&p, &q) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn geodesic_midpoint_on_axis() {
        let mut out = vec![0.0; 3];
        geodesic_into(&axis(0.0), &axis(2.0), 0.5, &mut out);
        assert!((out[0] - 1f64.cosh()).abs() < 1e-12);
        assert!((out[1] - 1f64.sinh()).abs() < 1e-12);
        geodesic_into(&axis(0.0), &axis(2.0), 3.0, &mut out);
        assert!((dist(&out, &axis(0.0)) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let x = {
            let mut x = vec![0.0, 0.7, -1.3, 0.4];
            normalize(&mut x);
            x
        };
        let f = tangent_frame(&x);
        for (i, a) in f.iter().enumerate() {
            assert!(mdot(a, &x).abs() < 1e-12);
            for (j, b) in f.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((mdot(a, b) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_inverts_log() {
        let mut x = vec![0.0, 0.3, 0.2];
        let mut y = vec![0.0, -1.0, 2.0];
        normalize(&mut x);
        normalize(&mut y);
        let v = log(&x, &y);
        let mut z = vec![0.0; 3];
        exp_into(&x, &v, &mut z);
        assert!(dist(&z, &y) < 1e-10);
    }
}
