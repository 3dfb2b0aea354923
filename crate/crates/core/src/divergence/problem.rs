use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition};
use crate::geometry::{ModelSpace, ProductPoint};
use crate::simplicial::{layered_cone, ManifoldMap, Role};
use crate::Result;

/// Default number of radial layers of the cone built by [`initial_filling`].
pub const FILLING_LAYERS: usize = 8;

/// One inner infimum of the divergence function: fill `sphere`, which sits on
/// `S(r)`, by a ball map avoiding the open ball `B(rho r)`.
#[derive(Clone, Debug)]
pub struct FillingProblem {
    pub sphere: ManifoldMap,
    pub r: f64,
    pub rho: f64,
    pub a: f64,
    /// Radial layers of the starting cone.
    pub layers: usize,
}

impl FillingProblem {
    /// Fails with a precondition error unless `sphere` is `a`-admissible on `S(r)`.
    pub fn new(sphere: ManifoldMap, r: f64, rho: f64, a: f64) -> Result<Self> {
        let report = sphere.check_admissible(r, rho, a, Role::Sphere)?;
        if !report.sphere_admissible {
            return Err(precondition(format!(
                "sphere is not admissible at r = {r}: volume {} against budget {}, radius deviation {}",
                report.volume,
                a * r.powi(sphere.dim() as i32),
                report.max_sphere_deviation
            )));
        }
        Ok(FillingProblem { sphere, r, rho, a, layers: FILLING_LAYERS })
    }

    pub fn with_layers(mut self, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(domain("at least one layer is needed"));
        }
        self.layers = layers;
        Ok(self)
    }

    /// Radius of the forbidden open ball.
    pub fn inner_radius(&self) -> f64 {
        self.rho * self.r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Initial step, in units of the local mesh size.
    pub initial_step: f64,
    pub step_shrink: f64,
    /// Stop once an accepted step lowers the volume by less than this fraction.
    pub tolerance: f64,
    pub seeds: usize,
    pub refine_rounds: usize,
    pub rng_seed: u64,
    /// Edge midpoints and quadrature nodes may dip this far below `rho r`
    /// (they may never get worse once they do). Keeps chords from cutting
    /// through the forbidden ball between feasible vertices.
    pub sag_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 400,
            initial_step: 0.5,
            step_shrink: 0.5,
            tolerance: 1e-6,
            seeds: 1,
            refine_rounds: 0,
            rng_seed: 0,
            sag_tolerance: 0.02,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.initial_step > 0.0
            && self.step_shrink > 0.0
            && self.step_shrink < 1.0
            && self.tolerance > 0.0
            && self.tolerance < 1.0
            && self.seeds > 0
            && self.sag_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(domain(format!("invalid optimizer configuration {self:?}")))
        }
    }
}

/// Tangent direction at the basepoint for the far point of the starting cone:
/// the frame axis (either sign) whose worst angle to the sphere images is
/// smallest. Geodesics from the sphere to a far point on that axis stay away
/// from the basepoint, so the radial projection of the cone is continuous.
pub(crate) fn far_direction(sphere: &ManifoldMap) -> Vec<f64> {
    let space = sphere.space();
    let x0 = &space.basepoint().0;
    let logs: Vec<Vec<f64>> = sphere
        .images()
        .iter()
        .map(|p| {
            let v = space.log(x0, p.coords());
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / n.max(f64::MIN_POSITIVE)).collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in space.tangent_frame(x0) {
        for sign in [1.0, -1.0] {
            let d: Vec<f64> = e.iter().map(|c| sign * c).collect();
            let score = logs
                .iter()
                .map(|l| l.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().map_or(true, |(s, _)| score > *s + 1e-12) {
                best = Some((score, d));
            }
        }
    }
    best.map(|(_, d)| d).unwrap_or_default()
}

/// Samples of resolution used to place the rings of the starting cone.
const CONE_SAMPLES: usize = 512;

/// `layers` points (the first being `p`) on the radially projected geodesic
/// from `p` to `far`, spaced evenly by arclength of the projected curve.
/// Spacing by the geodesic parameter instead leaves the stretch where the
/// geodesic passes near the basepoint, which projects onto a long arc of
/// `S(inner)`, with almost no vertices.
fn cone_line(space: &ModelSpace, p: &[f64], far: &[f64], inner: f64, layers: usize) -> Vec<Vec<f64>> {
    let project = |q: Vec<f64>| -> Vec<f64> {
        if space.norm(&q) < inner {
            // The far point is chosen so the cone misses the basepoint; fall
            // back to the sphere vertex itself if it does not.
            space.radial_project_raw(&q, inner).unwrap_or_else(|| p.to_vec())
        } else {
            q
        }
    };
    let samples: Vec<Vec<f64>> = (0..=CONE_SAMPLES)
        .map(|i| project(space.geodesic_raw(p, far, i as f64 / CONE_SAMPLES as f64)))
        .collect();
    let mut arc = vec![0.0; samples.len()];
    for i in 1..samples.len() {
        arc[i] = arc[i - 1] + space.dist_raw(&samples[i - 1], &samples[i]);
    }
    let total = arc[CONE_SAMPLES];
    let mut out = vec![p.to_vec()];
    let mut i = 0;
    for j in 1..layers {
        let target = total * j as f64 / layers as f64;
        while i + 1 < CONE_SAMPLES && arc[i + 1] < target {
            i += 1;
        }
        let span = arc[i + 1] - arc[i];
        let t = if span > 0.0 { ((target - arc[i]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(project(space.geodesic_raw(&samples[i], &samples[i + 1], t)));
    }
    out
}

/// A feasible starting filling: the sphere coned to a point at distance `5r`
/// from the basepoint, with every cone vertex that falls inside `B(rho r)`
/// pushed radially out to `S(rho r)`. Rings sit at equal arclength along the
/// projected cone lines.
pub fn initial_filling(problem: &FillingProblem) -> Result<ManifoldMap> {
    let sphere = &problem.sphere;
    let space = sphere.space();
    let x0 = &space.basepoint().0;
    let dir: Vec<f64> = far_direction(sphere).iter().map(|c| c * 5.0 * problem.r).collect();
    let mut far = vec![0.0; space.coord_len()];
    space.exp_into(x0, &dir, &mut far);

    let complex = layered_cone(sphere.complex(), problem.layers)?;
    let inner = problem.inner_radius();
    let nv = sphere.complex().num_vertices();
    let lines: Vec<Vec<Vec<f64>>> = (0..nv)
        .map(|i| cone_line(space, sphere.image(i).coords(), &far, inner, problem.layers))
        .collect();
    let mut images = Vec::with_capacity(complex.num_vertices());
    for j in 0..problem.layers {
        for line in &lines {
            images.push(ProductPoint(line[j].clone()));
        }
    }
    images.push(ProductPoint(far));
    ManifoldMap::new(space.clone(), complex, images)?.with_quadrature_order(sphere.quadrature_order())
}
