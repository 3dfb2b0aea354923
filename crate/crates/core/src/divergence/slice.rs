use std::collections::HashSet;

use crate::constructions::{leaf_coordinate, LeafParam};
use crate::error::structural;
use crate::geometry::ProductPoint;
use crate::linalg::solve;
use crate::simplicial::{eval_cone, ManifoldMap};
use crate::Result;

/// Barycentric weights below this count as zero when deciding which face a
/// slice point lies on.
const FACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LeafSlice {
    /// Total ambient length of the slice polyline.
    pub length: f64,
    /// Points where the slice leaves the filling through its boundary.
    pub endpoints: Vec<ProductPoint>,
    pub segments: usize,
    /// The level set misses the filling entirely.
    pub empty: bool,
}

/// Intersects `filling` with the leaf `{leaf_coordinate = s}`.
///
/// The leaf coordinates are interpolated linearly over each simplex of the
/// reference complex; in a `k`-simplex the `k - 1` independent equations cut
/// out a segment, whose end points are mapped through the filling and joined
/// by an ambient geodesic chord.
pub fn leaf_slice(filling: &ManifoldMap, s: &LeafParam) -> Result<LeafSlice> {
    let space = filling.space();
    let k = space.factors().len();
    if s.values().len() != k {
        return Err(structural(format!("leaf parameter has {} entries for {k} factors", s.values().len())));
    }
    if filling.dim() != k {
        return Err(structural(format!(
            "slicing needs a {k}-dimensional filling in a product of {k} factors, got dimension {}",
            filling.dim()
        )));
    }
    let coords: Vec<Vec<f64>> = filling
        .images()
        .iter()
        .map(|p| leaf_coordinate(space, p).map(|l| l.values().to_vec()))
        .collect::<Result<_>>()?;

    let boundary: Vec<Vec<usize>> = filling
        .complex()
        .boundary_faces()
        .into_iter()
        .map(|mut f| {
            f.sort_unstable();
            f
        })
        .collect();

    let mut length = 0.0;
    let mut segments = 0;
    let mut endpoints: Vec<ProductPoint> = Vec::new();
    let mut seen_faces = HashSet::new();
    let mut a = vec![0.0; space.coord_len()];
    let mut b = vec![0.0; space.coord_len()];
    for i in 0..filling.complex().simplices().len() {
        let simplex = filling.sorted_simplex(i);
        let Some((la, lb)) = cut_simplex(simplex, &coords, s.values()) else {
            continue;
        };
        let imgs: Vec<&[f64]> = simplex.iter().map(|&v| filling.image(v).coords()).collect();
        eval_cone(space, &imgs, &la, &mut a);
        eval_cone(space, &imgs, &lb, &mut b);
        for (lam, p) in [(&la, &a), (&lb, &b)] {
            let support: Vec<usize> =
                simplex.iter().zip(lam.iter()).filter(|(_, &l)| l > FACE_TOL).map(|(&v, _)| v).collect();
            let on_boundary = boundary.iter().any(|face| support.iter().all(|v| face.contains(v)));
            if on_boundary && !endpoints.iter().any(|e| space.dist_raw(e.coords(), p) < 1e-12) {
                endpoints.push(ProductPoint(p.clone()));
            }
        }
        // A segment inside a face shared by two simplices is found twice.
        if let Some(j) = (0..simplex.len()).find(|&j| la[j] <= FACE_TOL && lb[j] <= FACE_TOL) {
            let face: Vec<usize> = simplex.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
            if !seen_faces.insert(face) {
                continue;
            }
        }
        length += space.dist_raw(&a, &b);
        segments += 1;
    }
    Ok(LeafSlice { length, endpoints, segments, empty: segments == 0 })
}

/// Barycentric end points of the segment where the linear interpolation of
/// the leaf coordinates over `simplex` equals `s`, if it is a proper segment.
fn cut_simplex(simplex: &[usize], coords: &[Vec<f64>], s: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = simplex.len();
    let k = n - 1;
    // Equations: sum_j lam_j c_j[e] = s[e] for the first k - 1 leaf entries,
    // and sum_j lam_j = 1. The last entry is dependent (entries sum to zero).
    let mut rows: Vec<Vec<f64>> = (0..k - 1).map(|e| simplex.iter().map(|&v| coords[v][e]).collect()).collect();
    rows.push(vec![1.0; n]);
    let mut rhs: Vec<f64> = s[..k - 1].to_vec();
    rhs.push(1.0);

    // Null direction by cofactors, particular solution with the column of the
    // largest cofactor dropped.
    let minor = |drop: usize| -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &x)| x).collect()).collect()
    };
    let null: Vec<f64> = (0..n)
        .map(|j| {
            let d = crate::linalg::det(minor(j));
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    let drop = (0..n).max_by(|&x, &y| null[x].abs().total_cmp(&null[y].abs()))?;
    if null[drop] == 0.0 {
        return None;
    }
    let part = solve(minor(drop), rhs)?;
    let mut lam0 = Vec::with_capacity(n);
    let mut it = part.into_iter();
    for j in 0..n {
        lam0.push(if j == drop { 0.0 } else { it.next()? });
    }
    // lam0 + t * null >= 0 componentwise.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..n {
        if null[j] > 0.0 {
            lo = lo.max(-lam0[j] / null[j]);
        } else if null[j] < 0.0 {
            hi = hi.min(-lam0[j] / null[j]);
        } else if lam0[j] < -FACE_TOL {
            return None;
        }
    }
    if !(hi > lo) {
        return None;
    }
    let at = |t: f64| -> Vec<f64> { lam0.iter().zip(&null).map(|(l, d)| (l + t * d).max(0.0)).collect() };
    Some((at(lo), at(hi)))
}
