use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::problem::{FillingProblem, OptimizerConfig};
use crate::error::{precondition, structural};
use crate::geometry::ModelSpace;
use crate::simplicial::{pairwise_sum, quadrature_nodes, simplex_volume_of, ManifoldMap, Role};
use crate::Result;

/// Step of the finite-difference volume gradient, per tangent direction.
pub const GRADIENT_STEP: f64 = 1e-5;

/// How far a seeded restart jitters interior vertices, relative to the local
/// mesh size.
const SEED_JITTER: f64 = 0.25;

/// Relative rounding slack tolerated by the smoothing pass per vertex.
const SMOOTH_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct OptimizedFilling {
    pub filling: ManifoldMap,
    pub volume: f64,
    /// Volume of the start carried through the same refinements, without any
    /// descent. `volume` never exceeds it.
    pub start_volume: f64,
    /// Volume after each sweep, one list per refinement round (the first
    /// entry of each list is the volume before the first sweep).
    pub history: Vec<Vec<f64>>,
    /// Index of the seed that produced `filling`; seed 0 is the unperturbed start.
    pub seed: usize,
    pub sweeps: usize,
}

/// Projected descent on the interior vertex images of `start`.
///
/// Each sweep visits the interior vertices in order. A vertex is moved along
/// its negative finite-difference volume gradient (preconditioned by local
/// mesh size), pushed radially out to `S(rho r)` if it lands inside, and the
/// move is kept only if the adjacent volume strictly drops and no edge
/// midpoint or quadrature node sinks below the sag allowance. Rejected moves
/// shrink that vertex's step by `step_shrink`; accepted ones grow it.
/// Boundary vertices never move.
pub fn optimize_filling(
    problem: &FillingProblem,
    start: &ManifoldMap,
    config: &OptimizerConfig,
) -> Result<OptimizedFilling> {
    config.validate()?;
    if start.dim() != problem.sphere.dim() + 1 {
        return Err(structural(format!(
            "a {}-dimensional filling cannot fill a {}-sphere",
            start.dim(),
            problem.sphere.dim()
        )));
    }
    let report = start.check_admissible(problem.r, problem.rho, problem.a, Role::Filling)?;
    if !report.filling_admissible {
        return Err(precondition(format!(
            "start enters B(rho r): min radius {} < {}",
            report.min_radius,
            problem.inner_radius()
        )));
    }

    let mut baseline = start.clone();
    for _ in 0..config.refine_rounds {
        baseline = refine_projected(problem, &baseline);
    }
    let start_volume = baseline.k_volume();

    let runs: Vec<Result<OptimizedFilling>> = (0..config.seeds)
        .into_par_iter()
        .map(|seed| run_seed(problem, start, config, seed).map(|mut run| {
            run.start_volume = start_volume;
            run
        }))
        .collect();
    let mut best: Option<OptimizedFilling> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().map_or(true, |b| run.volume < b.volume) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one seed");
    if best.volume > start_volume {
        best.volume = start_volume;
        best.filling = baseline;
    }
    Ok(best)
}

fn run_seed(
    problem: &FillingProblem,
    start: &ManifoldMap,
    config: &OptimizerConfig,
    seed: usize,
) -> Result<OptimizedFilling> {
    let mut map = start.clone();
    if seed > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_add(seed as u64));
        jitter(problem, &mut map, &mut rng);
    }
    let mut history = Vec::new();
    let mut sweeps = 0;
    for round in 0..=config.refine_rounds {
        if round > 0 {
            map = refine_projected(problem, &map);
        }
        // Coarse rounds get a looser sag allowance: refinement roughly
        // quarters the sag of chords that hug the sphere, so the allowance
        // shrinks by 4 per round down to the configured tolerance. It never
        // exceeds half the inner radius, so chords cannot cut across the ball.
        let loosen = 4f64.powi((config.refine_rounds - round) as i32);
        let allowance = (config.sag_tolerance * loosen).min(0.5 * problem.inner_radius()).max(config.sag_tolerance);
        let mut mesh = Mesh::new(&map, problem, allowance);
        let h = mesh.descend(config);
        sweeps += h.len() - 1;
        history.push(h);
        map = mesh.into_map(map);
    }
    let volume = map.k_volume();
    Ok(OptimizedFilling { filling: map, volume, start_volume: volume, history, seed, sweeps })
}

/// Refines and restores the constraints: new boundary vertices go back onto
/// `S(r)`, new interior vertices inside `B(rho r)` out to `S(rho r)`.
pub(crate) fn refine_projected(problem: &FillingProblem, map: &ManifoldMap) -> ManifoldMap {
    let old = map.complex().num_vertices();
    let mut fine = map.refine();
    let space = fine.space().clone();
    let inner = problem.inner_radius();
    for v in old..fine.complex().num_vertices() {
        let p = fine.image(v).coords();
        let target = if fine.complex().is_boundary(v) {
            Some(problem.r)
        } else if space.norm(p) < inner {
            Some(inner)
        } else {
            None
        };
        if let Some(t) = target {
            if let Some(q) = space.radial_project_raw(p, t) {
                fine.set_image(v, q);
            }
        }
    }
    fine
}

fn jitter(problem: &FillingProblem, map: &mut ManifoldMap, rng: &mut ChaCha8Rng) {
    let mesh = Mesh::new(map, problem, 0.0);
    let space = map.space().clone();
    let inner = problem.inner_radius();
    for &v in &mesh.interior {
        let x = map.image(v).coords().to_vec();
        let scale = SEED_JITTER * mesh.local_size(v);
        let frame = space.tangent_frame(&x);
        let c: Vec<f64> = frame.iter().map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        }).collect();
        let mut y = space.exp_frame(&x, &frame, &c);
        if space.norm(&y) < inner {
            y = space.radial_project_raw(&y, inner).unwrap_or(x);
        }
        map.set_image(v, y);
    }
}

/// Working copy of a filling with per-simplex volume and sag caches.
struct Mesh {
    space: ModelSpace,
    simplices: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    neighbours: Vec<Vec<usize>>,
    interior: Vec<usize>,
    images: Vec<Vec<f64>>,
    nodes: Vec<Vec<f64>>,
    volumes: Vec<f64>,
    sag: Vec<f64>,
    inner: f64,
    sag_floor: f64,
}

impl Mesh {
    fn new(map: &ManifoldMap, problem: &FillingProblem, sag_allowance: f64) -> Self {
        let space = map.space().clone();
        let complex = map.complex();
        let simplices: Vec<Vec<usize>> =
            (0..complex.simplices().len()).map(|i| map.sorted_simplex(i).to_vec()).collect();
        let mut adjacency = vec![Vec::new(); complex.num_vertices()];
        for (i, s) in simplices.iter().enumerate() {
            for &v in s {
                adjacency[v].push(i);
            }
        }
        let mut neighbours = vec![Vec::new(); complex.num_vertices()];
        for (a, b) in complex.edges() {
            neighbours[a].push(b);
            neighbours[b].push(a);
        }
        let interior = (0..complex.num_vertices()).filter(|&v| !complex.is_boundary(v)).collect();
        let images: Vec<Vec<f64>> = map.images().iter().map(|p| p.0.clone()).collect();
        let k = map.dim();
        let nodes = if k >= 2 { quadrature_nodes(k, map.quadrature_order()) } else { Vec::new() };
        let inner = problem.inner_radius();
        let mut mesh = Mesh {
            space,
            simplices,
            adjacency,
            neighbours,
            interior,
            images,
            nodes,
            volumes: Vec::new(),
            sag: Vec::new(),
            inner,
            sag_floor: inner - sag_allowance,
        };
        let (volumes, sag): (Vec<f64>, Vec<f64>) = (0..mesh.simplices.len())
            .into_par_iter()
            .map(|i| (mesh.simplex_volume(i, None), mesh.simplex_sag(i, None)))
            .unzip();
        mesh.volumes = volumes;
        mesh.sag = sag;
        mesh
    }

    fn gather<'a>(&'a self, i: usize, sub: Option<(usize, &'a [f64])>) -> Vec<&'a [f64]> {
        self.simplices[i]
            .iter()
            .map(|&v| match sub {
                Some((w, p)) if w == v => p,
                _ => self.images[v].as_slice(),
            })
            .collect()
    }

    fn simplex_volume(&self, i: usize, sub: Option<(usize, &[f64])>) -> f64 {
        simplex_volume_of(&self.space, &self.gather(i, sub), &self.nodes)
    }

    /// Smallest radius over the edge midpoints and quadrature nodes of simplex `i`.
    fn simplex_sag(&self, i: usize, sub: Option<(usize, &[f64])>) -> f64 {
        let imgs = self.gather(i, sub);
        let mut out = vec![0.0; self.space.coord_len()];
        let mut m = f64::INFINITY;
        for a in 0..imgs.len() {
            for b in a + 1..imgs.len() {
                self.space.geodesic_into(imgs[a], imgs[b], 0.5, &mut out);
                m = m.min(self.space.norm(&out));
            }
        }
        for b in &self.nodes {
            crate::simplicial::eval_cone(&self.space, &imgs, b, &mut out);
            m = m.min(self.space.norm(&out));
        }
        m
    }

    fn local_volume(&self, v: usize, p: &[f64]) -> f64 {
        self.adjacency[v].iter().map(|&i| self.simplex_volume(i, Some((v, p)))).sum()
    }

    /// Mean length of the edges at `v`.
    fn local_size(&self, v: usize) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for &i in &self.adjacency[v] {
            for &w in &self.simplices[i] {
                if w != v {
                    total += self.space.dist_raw(&self.images[v], &self.images[w]);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    fn total(&self) -> f64 {
        pairwise_sum(&self.volumes)
    }

    /// Runs sweeps until the relative drop per sweep falls below the
    /// tolerance twice in a row, or `max_iters` sweeps. Returns the volume
    /// history, starting with the volume before the first sweep.
    fn descend(&mut self, config: &OptimizerConfig) -> Vec<f64> {
        let mut steps = vec![config.initial_step; self.images.len()];
        let mut total = self.total();
        let mut history = vec![total];
        let mut quiet = 0;
        for _ in 0..config.max_iters {
            let before = total;
            for idx in 0..self.interior.len() {
                let v = self.interior[idx];
                total = self.relax_vertex(v, &mut steps[v], total, config);
            }
            total = self.smooth(total);
            history.push(total);
            debug_assert!(total <= before);
            if before - total < config.tolerance * before {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        history
    }

    /// Volume-neutral mesh repair. Pure volume descent lets vertices pile up
    /// (a stack of coincident vertices is a local minimum for each of them
    /// separately); this pass moves every interior vertex halfway towards
    /// the geodesic mean of its neighbours whenever that does not raise the
    /// adjacent volume beyond rounding, and is undone as a whole if the total
    /// went up.
    fn smooth(&mut self, total: f64) -> f64 {
        let saved = (self.images.clone(), self.volumes.clone(), self.sag.clone());
        let mut running = total;
        for idx in 0..self.interior.len() {
            let v = self.interior[idx];
            let x = self.images[v].clone();
            let nb = &self.neighbours[v];
            if nb.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; x.len()];
            for &w in nb {
                for (m, l) in mean.iter_mut().zip(self.space.log(&x, &self.images[w])) {
                    *m += 0.5 * l / nb.len() as f64;
                }
            }
            let mut candidate = vec![0.0; x.len()];
            self.space.exp_into(&x, &mean, &mut candidate);
            if self.space.norm(&candidate) < self.inner {
                match self.space.radial_project_raw(&candidate, self.inner) {
                    Some(q) => candidate = q,
                    None => continue,
                }
            }
            let adj = &self.adjacency[v];
            let old_local: f64 = adj.iter().map(|&i| self.volumes[i]).sum();
            let new_vols: Vec<f64> = adj.iter().map(|&i| self.simplex_volume(i, Some((v, &candidate)))).collect();
            let new_local: f64 = new_vols.iter().sum();
            if new_local > old_local * (1.0 + SMOOTH_SLACK) {
                continue;
            }
            let new_sag: Vec<f64> = adj.iter().map(|&i| self.simplex_sag(i, Some((v, &candidate)))).collect();
            if !adj.iter().zip(&new_sag).all(|(&i, &s)| s >= self.sag[i].min(self.sag_floor) - 1e-12) {
                continue;
            }
            for ((&i, vol), s) in adj.iter().zip(new_vols).zip(new_sag) {
                self.volumes[i] = vol;
                self.sag[i] = s;
            }
            self.images[v] = candidate;
            running = (running - old_local) + new_local;
        }
        let fresh = self.total();
        if fresh <= total && running <= total {
            running.min(fresh).min(total)
        } else {
            (self.images, self.volumes, self.sag) = saved;
            total
        }
    }

    /// One gradient move of vertex `v` with backtracking. Returns the updated
    /// running total.
    fn relax_vertex(&mut self, v: usize, step: &mut f64, total: f64, config: &OptimizerConfig) -> f64 {
        let x = self.images[v].clone();
        let old_local: f64 = self.adjacency[v].iter().map(|&i| self.volumes[i]).sum();
        if old_local <= 0.0 {
            return total;
        }
        let size = self.local_size(v);
        if size <= 0.0 {
            return total;
        }
        let frame = self.space.tangent_frame(&x);
        let mut probe = vec![0.0; x.len()];
        let grad: Vec<f64> = frame
            .iter()
            .map(|e| {
                let v_step: Vec<f64> = e.iter().map(|c| c * GRADIENT_STEP).collect();
                self.space.exp_into(&x, &v_step, &mut probe);
                (self.local_volume(v, &probe) - old_local) / GRADIENT_STEP
            })
            .collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            return total;
        }
        // Preconditioned direction: a unit of step moves about one mesh size
        // when the volume changes like a flat cell.
        let scale = size * size / old_local;
        let mut move_len = gnorm * scale;
        if move_len > size {
            move_len = size;
        }
        let dir: Vec<f64> = grad.iter().map(|g| -g / gnorm * move_len).collect();

        let min_step = config.initial_step * 1e-6;
        let mut alpha = *step;
        let mut candidate = vec![0.0; x.len()];
        while alpha >= min_step {
            let c: Vec<f64> = dir.iter().map(|d| d * alpha).collect();
            let mut vtan = vec![0.0; x.len()];
            for (e, ci) in frame.iter().zip(&c) {
                for (t, ej) in vtan.iter_mut().zip(e) {
                    *t += ci * ej;
                }
            }
            self.space.exp_into(&x, &vtan, &mut candidate);
            if self.space.norm(&candidate) < self.inner {
                match self.space.radial_project_raw(&candidate, self.inner) {
                    Some(q) => candidate = q,
                    None => {
                        alpha *= config.step_shrink;
                        continue;
                    }
                }
            }
            let adj = &self.adjacency[v];
            let new_vols: Vec<f64> = adj.iter().map(|&i| self.simplex_volume(i, Some((v, &candidate)))).collect();
            let new_local: f64 = new_vols.iter().sum();
            let new_total = (total - old_local) + new_local;
            if new_local < old_local && new_total < total {
                let new_sag: Vec<f64> = adj.iter().map(|&i| self.simplex_sag(i, Some((v, &candidate)))).collect();
                let sag_ok = adj
                    .iter()
                    .zip(&new_sag)
                    .all(|(&i, &s)| s >= self.sag[i].min(self.sag_floor) - 1e-12);
                if sag_ok {
                    for ((&i, vol), s) in adj.iter().zip(new_vols).zip(new_sag) {
                        self.volumes[i] = vol;
                        self.sag[i] = s;
                    }
                    self.images[v] = candidate;
                    *step = (alpha * 1.5).min(4.0 * config.initial_step);
                    return new_total;
                }
            }
            alpha *= config.step_shrink;
        }
        *step = config.initial_step;
        total
    }

    fn into_map(self, mut map: ManifoldMap) -> ManifoldMap {
        for (v, p) in self.images.into_iter().enumerate() {
            map.set_image(v, p);
        }
        map
    }
}
