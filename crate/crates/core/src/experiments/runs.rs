//! Bodies of the registry experiments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{positive_radii, require, Assertion, ExperimentSpec, Output};
use crate::constructions::{
    embed_y_point, flat_sphere, horizontal_dim, leaf_coordinate, nonconvexity_gap, perturb_loop, polyline_length,
    pulloff_filling, straighten_map, supports_leaves, suspend, transport_sphere, LeafParam, PerturbCase, QIMap,
};
use crate::divergence::{
    estimate_divergence, leaf_slice, sweep_fillings, GrowthFit, GrowthPoint, GrowthSeries, OptimizerConfig,
    SphereGenerator, SweepSettings, FIT_TIE,
};
use crate::geometry::{FactorKind, ModelSpace, ProductPoint};
use crate::simplicial::{triangulate_ball, triangulate_sphere, ManifoldMap, Role};
use crate::Result;

fn fmt(x: f64) -> String {
    x.to_string()
}

fn radii_or(spec: &ExperimentSpec, default: &[f64]) -> Result<Vec<f64>> {
    let radii = spec.params.radii.clone().unwrap_or_else(|| default.to_vec());
    positive_radii(&radii)?;
    Ok(radii)
}

/// Circle of radius `r` through `exp` of the frame axes `i` and `j` at the basepoint.
fn frame_circle(space: &ModelSpace, i: usize, j: usize, r: f64, depth: usize) -> Result<ManifoldMap> {
    let x0 = space.basepoint().coords();
    let frame = space.tangent_frame(x0);
    ManifoldMap::from_fn(space.clone(), triangulate_sphere(1, depth)?, |v| {
        let mut c = vec![0.0; frame.len()];
        c[i] = r * v[0];
        c[j] = r * v[1];
        ProductPoint(space.exp_frame(x0, &frame, &c))
    })
}

fn exp_margin(fit: Option<&GrowthFit>) -> Option<f64> {
    fit.map(|f| f.exponential().r_squared - f.polynomial().r_squared)
}

fn poly_margin(fit: Option<&GrowthFit>) -> Option<f64> {
    exp_margin(fit).map(|m| -m)
}

pub(super) fn div0_hyperbolic(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2")?;
    let f = space.factors();
    require(
        f.len() == 1 && f[0].kind == FactorKind::Hyperbolic && f[0].dim >= 2,
        "div0-hyperbolic needs a single hyperbolic factor of dimension at least 2",
    )?;
    let radii = radii_or(spec, &[1.0, 2.0, 3.0, 4.0, 5.0])?;

    let depth = spec.params.depth.unwrap_or(6);
    let mut checks = Vec::new();
    for r in [1.0f64, 2.0, 3.0] {
        let length = frame_circle(&space, 0, 1, r, depth)?.k_volume();
        let oracle = 2.0 * PI * r.sinh();
        checks.push(Assertion::at_most(format!("r={r}: |length / (2 pi sinh r) - 1|"), (length / oracle - 1.0).abs(), 0.01));
    }
    out.report("circumference", checks, vec![])?;

    let settings = SweepSettings {
        rho: spec.params.rho.unwrap_or(1.0),
        a: spec.params.a.unwrap_or(1.0),
        layers: spec.params.layers.unwrap_or(8),
        optimizer: spec.optimizer(OptimizerConfig { refine_rounds: 6, ..OptimizerConfig::default() }),
    };
    let series = estimate_divergence(&space, 0, &radii, &SphereGenerator::AntipodalPair, &settings)?;
    let rec = out.series("div0_hyperbolic.csv", &series)?;
    let mut checks = Vec::new();
    for p in &series.points {
        let oracle = PI * p.r.sinh();
        let r = p.r;
        checks.push(Assertion::at_most(format!("r={r}: |length / (pi sinh r) - 1|"), p.volume.map(|v| (v / oracle - 1.0).abs()), 0.1));
        checks.push(Assertion::at_least(format!("r={r}: length / (2 sinh r)"), p.volume.map(|v| v / (2.0 * r.sinh())), 1.0));
    }
    let fit = series.fit.as_ref();
    checks.push(Assertion::at_least("exponential minus polynomial r_squared", exp_margin(fit), FIT_TIE));
    checks.push(Assertion::at_least("exponential rate", fit.map(|f| f.exponential().parameter), 0.8));
    checks.push(Assertion::at_most("exponential rate", fit.map(|f| f.exponential().parameter), 1.1));
    out.report("div0_hyperbolic", checks, vec![rec])?;

    // Euclidean control: the same problem in the flat space of equal dimension.
    let flat = ModelSpace::new(vec![crate::geometry::Factor::euclidean(space.dim())])?;
    let series = estimate_divergence(&flat, 0, &radii, &SphereGenerator::AntipodalPair, &settings)?;
    let rec = out.series("div0_euclidean.csv", &series)?;
    let mut checks = Vec::new();
    for p in &series.points {
        let r = p.r;
        checks.push(Assertion::at_most(format!("r={r}: |length / (pi r) - 1|"), p.volume.map(|v| (v / (PI * r) - 1.0).abs()), 0.02));
    }
    let fit = series.fit.as_ref();
    checks.push(Assertion::at_least("polynomial minus exponential r_squared", poly_margin(fit), FIT_TIE));
    checks.push(Assertion::at_most("|polynomial degree - 1|", fit.map(|f| (f.polynomial().parameter - 1.0).abs()), 0.1));
    out.report("euclidean_control", checks, vec![rec])
}

/// Circle of radius `r` in the 3-flat spanned by the first axis of the
/// first factor and the trailing `R^2`, tilted 45 degrees out of `R^2`.
fn tilted_circle(space: &ModelSpace, r: f64, depth: usize) -> Result<ManifoldMap> {
    let x0 = space.basepoint().coords();
    let frame = space.tangent_frame(x0);
    let n = frame.len();
    ManifoldMap::from_fn(space.clone(), triangulate_sphere(1, depth)?, |v| {
        let mut c = vec![0.0; n];
        c[0] = r * v[1] * FRAC_1_SQRT_2;
        c[n - 2] = r * v[0];
        c[n - 1] = r * v[1] * FRAC_1_SQRT_2;
        ProductPoint(space.exp_frame(x0, &frame, &c))
    })
}

pub(super) fn pulloff_cubic(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xR2")?;
    let radii = radii_or(spec, &[2.0, 4.0, 6.0, 8.0, 10.0])?;
    let depth = spec.params.depth.unwrap_or(5);
    let a = spec.params.a.unwrap_or(2.0 * PI);
    let results = radii
        .par_iter()
        .map(|&r| {
            let gamma = tilted_circle(&space, r, depth)?;
            let res = pulloff_filling(&space, &gamma, a, r)?;
            let rep = res.filling.check_admissible(r, 1.0, a, Role::Filling)?;
            Ok((r, res, rep.min_radius))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut checks = Vec::new();
    for (r, res, min_radius) in &results {
        let mut row = vec![fmt(*r)];
        row.extend(res.stage_areas.iter().map(|v| fmt(*v)));
        row.extend([fmt(res.area), fmt(res.budget)]);
        rows.push(row);
        points.push(GrowthPoint { r: *r, volume: Some(res.area), admissible: true, seed_best: None });
        checks.push(Assertion::at_most(format!("r={r}: area / (35 A r^3)"), res.area / (35.0 * a * r.powi(3)), 1.0));
        checks.push(Assertion::at_least(format!("r={r}: min radius - r"), min_radius - r, -1e-6));
    }
    out.table("pulloff_stages.csv", &["r", "stage1", "stage2", "stage3", "stage4", "area", "budget"], &rows)?;
    let series = GrowthSeries::from_values(points)?;
    let rec = out.series("pulloff_cubic.csv", &series)?;
    let fit = series.fit.as_ref();
    checks.push(Assertion::at_most("polynomial degree", fit.map(|f| f.polynomial().parameter), 3.3));
    checks.push(Assertion::at_least("polynomial minus exponential r_squared", poly_margin(fit), FIT_TIE));
    out.report("pulloff_cubic", checks, vec![rec])
}

pub(super) fn suspend_exp(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xR1")?;
    let nf = space.factors().len();
    require(nf >= 2, "suspend-exp needs a space of the form X x R")?;
    let x = ModelSpace::new(space.factors()[..nf - 1].to_vec())?;
    require(x.dim() >= 2, "suspend-exp needs dim X >= 2")?;

    let r = 2.0;
    let f = frame_circle(&x, 0, 1, r, spec.params.depth.unwrap_or(5))?;
    let s = suspend(&space, &f, r)?;
    let seg = crate::constructions::SUSPENSION_SEGMENTS;
    let nv = f.complex().num_vertices();
    let north = nv * (seg - 1);
    let radius_dev = s.images().iter().map(|p| (space.norm(p.coords()) - r).abs()).fold(0.0, f64::max);
    let equator = (seg / 2 - 1) * nv;
    let x_len = x.coord_len();
    let equator_dev = (0..nv)
        .map(|i| {
            let c = s.image(equator + i).coords();
            x.dist_raw(&c[..x_len], f.image(i).coords()) + c[x_len].abs()
        })
        .fold(0.0, f64::max);
    let meridian_dev = (0..nv)
        .map(|i| {
            let mut chain = vec![north];
            chain.extend((1..seg).map(|j| (j - 1) * nv + i));
            chain.push(north + 1);
            let len: f64 =
                chain.windows(2).map(|w| space.dist_raw(s.image(w[0]).coords(), s.image(w[1]).coords())).sum();
            (len / (PI * r) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let checks = vec![
        Assertion::at_most("max |d(x0, image) - r|", radius_dev, 1e-6),
        Assertion::at_most("max equator distance to f", equator_dev, 1e-12),
        Assertion::at_most("max |meridian length / (pi r) - 1|", meridian_dev, 0.01),
    ];
    out.report("suspension", checks, vec![])?;

    let radii = radii_or(spec, &[1.0, 2.0, 3.0, 4.0, 5.0])?;
    let settings = SweepSettings {
        rho: spec.params.rho.unwrap_or(1.0),
        a: spec.params.a.unwrap_or(2.0 * PI),
        layers: spec.params.layers.unwrap_or(6),
        optimizer: spec.optimizer(OptimizerConfig { max_iters: 60, tolerance: 1e-4, ..OptimizerConfig::default() }),
    };
    let series = estimate_divergence(&space, 1, &radii, &SphereGenerator::suspended(), &settings)?;
    let rec = out.series("suspend_exp.csv", &series)?;
    let checks = vec![Assertion::at_least(
        "exponential rate",
        series.fit.as_ref().map(|f| f.exponential().parameter),
        0.3,
    )];
    out.report("suspend_exp", checks, vec![rec])
}

/// Samples of the leaf parameter used for the co-area integral.
const COAREA_SAMPLES: usize = 21;

/// Length of the shortest path between antipodal points of the radius `r`
/// sphere in a leaf of curvature `-1/k` that stays outside the open ball.
pub fn leaf_oracle(r: f64, k: usize) -> f64 {
    let s = (k as f64).sqrt();
    PI * s * (r / s).sinh()
}

pub(super) fn product_hardfill(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xH2")?;
    require(supports_leaves(&space) && space.factors().len() == 2, "product-hardfill needs H^m x H^n with m, n >= 2")?;
    let k = space.factors().len();
    let radii = radii_or(spec, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])?;
    let settings = SweepSettings {
        rho: spec.params.rho.unwrap_or(1.0),
        a: spec.params.a.unwrap_or(2.0 * PI),
        layers: spec.params.layers.unwrap_or(6),
        optimizer: spec.optimizer(OptimizerConfig {
            max_iters: 60,
            tolerance: 1e-4,
            refine_rounds: 1,
            ..OptimizerConfig::default()
        }),
    };
    let generator = SphereGenerator::FlatSphere { depth: spec.params.depth.unwrap_or(3) };
    let entries = sweep_fillings(&space, k - 1, &radii, &generator, &settings)?;

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for e in &entries {
        let r = e.point.r;
        let Some(best) = &e.best else {
            checks.push(Assertion::at_least(format!("r={r}: s=0 slice / leaf oracle"), None, 0.95));
            continue;
        };
        let area = best.volume;
        // the leaf parameter (sigma, -sigma) / sqrt 2 sits at distance |sigma| from 0
        let sigmas: Vec<f64> =
            (0..COAREA_SAMPLES).map(|i| -1.0 + 2.0 * i as f64 / (COAREA_SAMPLES - 1) as f64).collect();
        let mut lengths = Vec::with_capacity(sigmas.len());
        for &sigma in &sigmas {
            let s = LeafParam::new(vec![sigma * FRAC_1_SQRT_2, -sigma * FRAC_1_SQRT_2])?;
            let slice = leaf_slice(&best.filling, &s)?;
            rows.push(vec![fmt(r), fmt(sigma), fmt(slice.length), slice.empty.to_string()]);
            lengths.push(slice.length);
        }
        let h = 2.0 / (COAREA_SAMPLES - 1) as f64;
        let integral: f64 = lengths.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        let center = lengths[COAREA_SAMPLES / 2];
        checks.push(Assertion::at_least(format!("r={r}: s=0 slice / leaf oracle"), center / leaf_oracle(r, k), 0.95));
        checks.push(Assertion::at_most(format!("r={r}: slice integral / area"), integral / area, 1.1));
    }
    out.table("product_hardfill_slices.csv", &["r", "s", "length", "empty"], &rows)?;
    let series = GrowthSeries::from_values(entries.into_iter().map(|e| e.point).collect())?;
    let rec = out.series("product_hardfill.csv", &series)?;
    let fit = series.fit.as_ref();
    checks.push(Assertion::at_least("exponential rate", fit.map(|f| f.exponential().parameter), 0.3));
    checks.push(Assertion::at_least("exponential minus polynomial r_squared", exp_margin(fit), 0.0));
    out.report("product_hardfill", checks, vec![rec])
}

fn random_leaf(rng: &mut ChaCha8Rng, k: usize) -> Result<LeafParam> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / k as f64;
    let mut s: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    // pin the sum to exactly zero
    let rest: f64 = s[..k - 1].iter().sum();
    s[k - 1] = -rest;
    LeafParam::new(s)
}

pub(super) fn embedding_check(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xH2")?;
    require(supports_leaves(&space) && space.factors().len() >= 2, "embedding-check needs a product of H^n, n >= 2")?;
    let k = space.factors().len();
    let sk = (k as f64).sqrt();
    let n = spec.params.samples.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed());
    let hd = horizontal_dim(&space);
    let mut rows = Vec::with_capacity(n);
    let (mut violations, mut worst_lower, mut worst_upper) = (0usize, f64::INFINITY, f64::INFINITY);
    for i in 0..n {
        let s = random_leaf(&mut rng, k)?;
        let point = |rng: &mut ChaCha8Rng| -> Result<ProductPoint> {
            let t = rng.gen_range(-4.0..4.0);
            let u: Vec<f64> = (0..hd).map(|_| rng.gen_range(-6.0..6.0)).collect();
            embed_y_point(&space, t, &u, &s)
        };
        let (p, q) = (point(&mut rng)?, point(&mut rng)?);
        let d = space.dist_raw(p.coords(), q.coords());
        let len = crate::constructions::y_path(&space, &p, &q, 2)?.length;
        let lower = len - d;
        let upper = 2.0 * sk * d + 2.0 * sk - len;
        worst_lower = worst_lower.min(lower);
        worst_upper = worst_upper.min(upper);
        if lower < -1e-9 || upper < -1e-6 {
            violations += 1;
        }
        rows.push(vec![i.to_string(), fmt(d), fmt(len)]);
    }
    out.table("embedding_pairs.csv", &["pair", "dist", "path_length"], &rows)?;
    let mut checks = vec![
        Assertion::at_most("sandwich violations", violations as f64, 0.0),
        Assertion::at_least("min (path length - dist)", worst_lower, -1e-9),
        Assertion::at_least("min (2 sqrt k dist + 2 sqrt k - path length)", worst_upper, -1e-6),
    ];
    for l in [1.0f64, 5.0, 15.0] {
        checks.push(Assertion::at_most(
            format!("l={l}: |gap - l sqrt((k-1)/k)|"),
            (nonconvexity_gap(l, k) - l * ((k as f64 - 1.0) / k as f64).sqrt()).abs(),
            1e-12,
        ));
    }
    checks.push(Assertion::at_least("gap at l=15", nonconvexity_gap(15.0, k), 10.0));
    out.report("embedding_check", checks, vec![])
}

/// A point of the product with every factor's spatial coordinates uniform
/// in `[-5, 5]`.
fn random_point(space: &ModelSpace, rng: &mut ChaCha8Rng) -> ProductPoint {
    let mut c = Vec::with_capacity(space.coord_len());
    for f in space.factors() {
        let xs: Vec<f64> = (0..f.dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if f.kind == FactorKind::Hyperbolic {
            c.push((1.0 + xs.iter().map(|v| v * v).sum::<f64>()).sqrt());
        }
        c.extend(xs);
    }
    ProductPoint(c)
}

pub(super) fn leaf_separation(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xH2")?;
    require(supports_leaves(&space) && space.factors().len() >= 2, "leaf-separation needs a product of H^n, n >= 2")?;
    let n = spec.params.samples.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed());
    let mut rows = Vec::with_capacity(n);
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let (p, q) = (random_point(&space, &mut rng), random_point(&space, &mut rng));
        let sep = leaf_coordinate(&space, &p)?.distance(&leaf_coordinate(&space, &q)?);
        let d = space.dist_raw(p.coords(), q.coords());
        worst = worst.min(d - sep);
        rows.push(vec![i.to_string(), fmt(d), fmt(sep)]);
    }
    out.table("leaf_separation_pairs.csv", &["pair", "dist", "leaf_separation"], &rows)?;
    out.report("leaf_separation", vec![Assertion::at_least("min (dist - leaf separation)", worst, -1e-9)], vec![])
}

/// Exact distance from the origin to the segment `pq`.
fn segment_norm(p: [f64; 2], q: [f64; 2]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd > 0.0 { (-(p[0] * d[0] + p[1] * d[1]) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] + t * d[0]).hypot(p[1] + t * d[1])
}

/// A closed star-shaped polygon around `c` with jittered radius `rad`.
fn random_loop(rng: &mut ChaCha8Rng, c: [f64; 2], rad: f64) -> Vec<[f64; 2]> {
    let n = rng.gen_range(6..40);
    let mut pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            let rr = rad * rng.gen_range(0.7..1.3);
            [c[0] + rr * a.cos(), c[1] + rr * a.sin()]
        })
        .collect();
    pts.push(pts[0]);
    pts
}

/// Relative slack allowed on the homotopy area for the quadrature error.
const AREA_QUADRATURE_TOL: f64 = 1e-3;

pub(super) fn perturb_suite(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let n = spec.params.samples.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed());
    let cases = [PerturbCase::Outside, PerturbCase::Inside, PerturbCase::Mixed];
    let mut counts = [0usize; 3];
    let mut rows = Vec::with_capacity(n);
    let (mut min_dist, mut length_excess, mut area_ratio) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for i in 0..n {
        let target = cases[i % 3];
        // redraw until the loop falls in the branch this slot is meant to exercise
        let (beta, a, r, res) = loop {
            let (c, rad) = match target {
                PerturbCase::Outside => {
                    let d = rng.gen_range(2.5..5.0);
                    let ang: f64 = rng.gen_range(0.0..2.0 * PI);
                    ([d * ang.cos(), d * ang.sin()], rng.gen_range(0.3..(d - 1.5) / 1.3))
                }
                PerturbCase::Inside => {
                    let ang: f64 = rng.gen_range(0.0..2.0 * PI);
                    let d = rng.gen_range(0.0..0.3);
                    ([d * ang.cos(), d * ang.sin()], rng.gen_range(0.05..0.5))
                }
                PerturbCase::Mixed => {
                    let ang: f64 = rng.gen_range(0.0..2.0 * PI);
                    let d = rng.gen_range(0.3..1.8);
                    ([d * ang.cos(), d * ang.sin()], rng.gen_range(0.6..2.5))
                }
            };
            let beta = random_loop(&mut rng, c, rad);
            let r = rng.gen_range(1.0..3.0);
            let a = polyline_length(&beta) / r;
            let res = perturb_loop(&beta, a, r)?;
            if res.case == target {
                break (beta, a, r, res);
            }
        };
        counts[i % 3] += 1;
        let d = res.beta.windows(2).map(|w| segment_norm(w[0], w[1])).fold(f64::INFINITY, f64::min);
        min_dist = min_dist.min(d);
        length_excess = length_excess.max(res.length - PI * a * r);
        area_ratio = area_ratio.max(res.area / (2.0 * PI * a * r));
        rows.push(vec![
            i.to_string(),
            format!("{:?}", res.case).to_lowercase(),
            beta.len().to_string(),
            fmt(a * r),
            fmt(res.length),
            fmt(res.area),
            fmt(d),
        ]);
    }
    out.table("perturb_loops.csv", &["loop", "case", "points", "length_budget", "length", "area", "min_distance"], &rows)?;
    let mut checks = vec![
        Assertion::at_least("min distance to the origin", min_dist, 1.0 - 1e-9),
        Assertion::at_most("max (length - pi A r)", length_excess, 1e-6),
        Assertion::at_most("max area / (2 pi A r)", area_ratio, 1.0 + AREA_QUADRATURE_TOL),
    ];
    for (case, count) in cases.iter().zip(counts) {
        checks.push(Assertion::at_least(format!("{case:?} loops"), count as f64, 1.0));
    }
    out.report("perturb_suite", checks, vec![])
}

/// Basepoint-fixing isometry: rotate the first two spatial coordinates of
/// every factor, and reverse the factor order when all factors agree.
fn rotation_isometry(space: &ModelSpace) -> impl Fn(&ProductPoint) -> ProductPoint + Send + Sync + 'static {
    let space = space.clone();
    move |p: &ProductPoint| {
        let mut parts: Vec<Vec<f64>> = (0..space.factors().len())
            .map(|i| {
                let mut c = p.coords()[space.factor_range(i)].to_vec();
                let off = usize::from(space.factors()[i].kind == FactorKind::Hyperbolic);
                if c.len() >= off + 2 {
                    let a = 0.7 + 1.3 * i as f64;
                    let (x, y) = (c[off], c[off + 1]);
                    c[off] = a.cos() * x - a.sin() * y;
                    c[off + 1] = a.sin() * x + a.cos() * y;
                }
                c
            })
            .collect();
        if space.factors().windows(2).all(|w| w[0] == w[1]) {
            parts.reverse();
        }
        ProductPoint(parts.concat())
    }
}

pub(super) fn straighten_demo(spec: &ExperimentSpec, out: &mut Output) -> Result<()> {
    let space = spec.space_or("H2xH2")?;
    let r = 2.0;
    let f = flat_sphere(&space, r, spec.params.depth.unwrap_or(5))?;
    let a = spec.params.a.unwrap_or(2.0 * PI);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let maps = [
        ("identity", QIMap::identity(space.clone())),
        ("isometry", QIMap::new(space.clone(), space.clone(), rotation_isometry(&space), 1.0, 0.0, 0.0)),
    ];
    for (name, qi) in &maps {
        let rep = transport_sphere(qi, &f, r, a)?;
        checks.push(Assertion::at_most(format!("{name}: |volume change|"), (rep.volume - rep.source_volume).abs(), 1e-6));
        checks.push(Assertion::at_least(format!("{name}: admissible"), f64::from(u8::from(rep.admissible)), 1.0));
        rows.push(vec![name.to_string(), fmt(rep.source_volume), fmt(rep.volume), fmt(rep.budget), rep.admissible.to_string()]);
    }
    out.table("transport.csv", &["map", "source_volume", "volume", "budget", "admissible"], &rows)?;

    // radial projection onto S(r) from outside B(r)
    let pairs = spec.params.samples.unwrap_or(10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed());
    let dirs = space.sphere_sample(1.0, spec.rng_seed(), 2 * pairs);
    let x0 = space.basepoint().coords();
    let push = |d: &ProductPoint, t: f64| -> Vec<f64> {
        let v: Vec<f64> = space.log(x0, d.coords()).into_iter().map(|c| c * t).collect();
        let mut out = vec![0.0; x0.len()];
        space.exp_into(x0, &v, &mut out);
        out
    };
    let mut worst = f64::NEG_INFINITY;
    let mut fixed = 0.0f64;
    for pair in dirs.chunks(2) {
        let p = push(&pair[0], rng.gen_range(r..3.0 * r));
        let q = push(&pair[1], rng.gen_range(r..3.0 * r));
        let (pp, qq) = (space.radial_project_raw(&p, r), space.radial_project_raw(&q, r));
        let (Some(pp), Some(qq)) = (pp, qq) else { continue };
        worst = worst.max(space.dist_raw(&pp, &qq) - space.dist_raw(&p, &q));
        let on = push(&pair[0], r);
        if let Some(back) = space.radial_project_raw(&on, r) {
            fixed = fixed.max(space.dist_raw(&on, &back));
        }
    }
    checks.push(Assertion::at_most("max (d(proj p, proj q) - d(p, q))", worst, 1e-9));
    checks.push(Assertion::at_most("max displacement of S(r) under projection", fixed, 1e-9));

    // straightening a rotation of the first factor on a net of a ball
    let h = ModelSpace::new(vec![space.factors()[0]])?;
    require(h.dim() >= 2, "straighten-demo needs a first factor of dimension at least 2")?;
    let ball = triangulate_ball(2, 3)?;
    let hx0 = h.basepoint().coords();
    let frame = h.tangent_frame(hx0);
    let positions: Vec<ProductPoint> = ball
        .vertices()
        .iter()
        .map(|v| {
            let mut c = vec![0.0; frame.len()];
            c[0] = 3.0 * v[0];
            c[1] = 3.0 * v[1];
            ProductPoint(h.exp_frame(hx0, &frame, &c))
        })
        .collect();
    let iso = QIMap::new(h.clone(), h.clone(), rotation_isometry(&h), 1.0, 0.0, 0.0);
    let st = straighten_map(&iso, &ball, &positions)?;
    checks.push(Assertion::at_most("straightened vertex displacement", st.vertex_displacement, 0.0));
    checks.push(Assertion::at_most("straightened midpoint displacement", st.midpoint_displacement, 1e-9));
    out.report("straighten_demo", checks, vec![])
}
