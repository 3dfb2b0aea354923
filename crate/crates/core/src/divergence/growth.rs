use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{optimize_filling, OptimizedFilling};
use super::problem::{initial_filling, FillingProblem, OptimizerConfig, FILLING_LAYERS};
use crate::constructions::{flat_sphere, suspend_with, SUSPENSION_SEGMENTS};
use crate::error::{domain, structural};
use crate::geometry::{ModelSpace, ProductPoint};
use crate::simplicial::{triangulate_sphere, ManifoldMap};
use crate::Result;

/// Two fits whose coefficients of determination differ by less than this
/// are reported as inconclusive.
pub const FIT_TIE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthKind {
    Polynomial,
    Exponential,
    Inconclusive,
}

impl fmt::Display for GrowthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthKind::Polynomial => "polynomial",
            GrowthKind::Exponential => "exponential",
            GrowthKind::Inconclusive => "inconclusive",
        })
    }
}

/// One regression line of `ln v`: on `ln r` (polynomial, slope = degree) or
/// on `r` (exponential, slope = rate).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitLine {
    pub kind: GrowthKind,
    pub parameter: f64,
    pub r_squared: f64,
}

/// Outcome of [`fit_growth`]. `parameter` and `r_squared` belong to the
/// hypothesis with the larger coefficient of determination (also when the
/// verdict is inconclusive); `alternative` is the other one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub kind: GrowthKind,
    pub parameter: f64,
    pub r_squared: f64,
    pub alternative: FitLine,
}

impl GrowthFit {
    fn line(&self, kind: GrowthKind) -> FitLine {
        if self.alternative.kind == kind {
            self.alternative
        } else {
            FitLine { kind, parameter: self.parameter, r_squared: self.r_squared }
        }
    }

    pub fn polynomial(&self) -> FitLine {
        self.line(GrowthKind::Polynomial)
    }

    pub fn exponential(&self) -> FitLine {
        self.line(GrowthKind::Exponential)
    }
}

fn regress(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    (slope, r2)
}

/// Classifies `points = [(r, v)]` as polynomial or exponential growth by
/// comparing least-squares fits of `ln v` on `ln r` and on `r`.
pub fn fit_growth(points: &[(f64, f64)]) -> Result<GrowthFit> {
    if points.len() < 4 {
        return Err(domain(format!("need at least 4 points to fit growth, got {}", points.len())));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(domain("radii must be strictly increasing"));
        }
    }
    if let Some(&(r, v)) = points.iter().find(|&&(r, v)| !(r > 0.0) || !(v > 0.0) || !v.is_finite()) {
        return Err(domain(format!("growth fits need positive radii and values, got ({r}, {v})")));
    }
    let ln_v: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ln_r: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let r: Vec<f64> = points.iter().map(|p| p.0).collect();
    let (degree, r2_poly) = regress(&ln_r, &ln_v);
    let (rate, r2_exp) = regress(&r, &ln_v);
    let poly = FitLine { kind: GrowthKind::Polynomial, parameter: degree, r_squared: r2_poly };
    let exp = FitLine { kind: GrowthKind::Exponential, parameter: rate, r_squared: r2_exp };
    let (lead, alt) = if r2_exp > r2_poly { (exp, poly) } else { (poly, exp) };
    let kind = if (r2_exp - r2_poly).abs() < FIT_TIE { GrowthKind::Inconclusive } else { lead.kind };
    Ok(GrowthFit { kind, parameter: lead.parameter, r_squared: lead.r_squared, alternative: alt })
}

/// Candidate hard spheres for the outer supremum.
#[derive(Clone)]
pub enum SphereGenerator {
    /// Two points at distance `r` on either side of the basepoint along the
    /// first tangent axis (`k = 0`).
    AntipodalPair,
    /// The round `(k-1)`-sphere in the diagonal flat of a product of `k`
    /// hyperbolic factors.
    FlatSphere { depth: usize },
    /// Suspension into `X x R` of the antipodal pair in `X`: a circle.
    Suspended { segments: usize },
    Custom(Arc<dyn Fn(&ModelSpace, f64) -> Result<ManifoldMap> + Send + Sync>),
}

impl fmt::Debug for SphereGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphereGenerator::AntipodalPair => f.write_str("AntipodalPair"),
            SphereGenerator::FlatSphere { depth } => write!(f, "FlatSphere {{ depth: {depth} }}"),
            SphereGenerator::Suspended { segments } => write!(f, "Suspended {{ segments: {segments} }}"),
            SphereGenerator::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl SphereGenerator {
    pub fn suspended() -> Self {
        SphereGenerator::Suspended { segments: SUSPENSION_SEGMENTS }
    }

    /// Dimension of the generated spheres in `space`.
    pub fn sphere_dim(&self, space: &ModelSpace) -> Option<usize> {
        match self {
            SphereGenerator::AntipodalPair => Some(0),
            SphereGenerator::FlatSphere { .. } => space.factors().len().checked_sub(1),
            SphereGenerator::Suspended { .. } => Some(1),
            SphereGenerator::Custom(_) => None,
        }
    }

    pub fn build(&self, space: &ModelSpace, r: f64) -> Result<ManifoldMap> {
        match self {
            SphereGenerator::AntipodalPair => antipodal_pair(space, r),
            SphereGenerator::FlatSphere { depth } => flat_sphere(space, r, *depth),
            SphereGenerator::Suspended { segments } => {
                let n = space.factors().len();
                if n < 2 {
                    return Err(structural("suspension needs a space of the form X x R"));
                }
                let x = ModelSpace::new(space.factors()[..n - 1].to_vec())?;
                suspend_with(space, &antipodal_pair(&x, r)?, r, *segments)
            }
            SphereGenerator::Custom(f) => f(space, r),
        }
    }
}

/// The 0-sphere `{exp(+r e), exp(-r e)}` for the first frame vector `e` at
/// the basepoint.
pub fn antipodal_pair(space: &ModelSpace, r: f64) -> Result<ManifoldMap> {
    if !(r > 0.0) {
        return Err(domain("radius must be positive"));
    }
    let x0 = space.basepoint().coords();
    let e = space.tangent_frame(x0).swap_remove(0);
    let complex = triangulate_sphere(0, 0)?;
    ManifoldMap::from_fn(space.clone(), complex, |y| {
        let v: Vec<f64> = e.iter().map(|c| c * r * y[0]).collect();
        let mut out = vec![0.0; x0.len()];
        space.exp_into(x0, &v, &mut out);
        ProductPoint(out)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub r: f64,
    /// Best filling volume; `None` when the candidate sphere was not admissible.
    pub volume: Option<f64>,
    pub admissible: bool,
    pub seed_best: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSeries {
    pub points: Vec<GrowthPoint>,
    /// Fit over the admissible points; `None` with fewer than four of them.
    pub fit: Option<GrowthFit>,
}

impl GrowthSeries {
    /// Builds a series from measured values and attaches a fit when possible.
    pub fn from_values(points: Vec<GrowthPoint>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(domain("radii must be strictly increasing"));
            }
        }
        let usable: Vec<(f64, f64)> =
            points.iter().filter(|p| p.admissible).filter_map(|p| p.volume.map(|v| (p.r, v))).collect();
        let fit = if usable.len() >= 4 { Some(fit_growth(&usable)?) } else { None };
        Ok(GrowthSeries { points, fit })
    }

    /// `(r, value)` pairs of the admissible points.
    pub fn values(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter(|p| p.admissible).filter_map(|p| p.volume.map(|v| (p.r, v))).collect()
    }

    /// CSV with header `r,volume,admissible,seed_best`, LF line endings.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        for p in &self.points {
            wtr.serialize(p)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads what [`GrowthSeries::write_csv`] wrote and refits it.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let points = rdr.deserialize().collect::<std::result::Result<Vec<GrowthPoint>, _>>()?;
        GrowthSeries::from_values(points)
    }

    pub fn fit_json(&self) -> serde_json::Value {
        serde_json::to_value(self.fit).unwrap_or(serde_json::Value::Null)
    }
}

/// Settings of a radius sweep besides the optimizer itself.
#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub rho: f64,
    pub a: f64,
    pub layers: usize,
    pub optimizer: OptimizerConfig,
}

impl SweepSettings {
    pub fn new(rho: f64, a: f64) -> Self {
        SweepSettings { rho, a, layers: FILLING_LAYERS, optimizer: OptimizerConfig::default() }
    }
}

/// One radius of a sweep: the recorded point and, for admissible
/// candidates, the optimized filling.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub point: GrowthPoint,
    pub best: Option<OptimizedFilling>,
}

/// Sweeps `radii`: builds the candidate sphere, checks it is admissible and
/// optimizes a filling from [`initial_filling`]. Inadmissible candidates are
/// flagged and carry no filling.
pub fn sweep_fillings(
    space: &ModelSpace,
    k: usize,
    radii: &[f64],
    generator: &SphereGenerator,
    settings: &SweepSettings,
) -> Result<Vec<SweepEntry>> {
    if let Some(d) = generator.sphere_dim(space) {
        if d != k {
            return Err(structural(format!("{generator:?} builds {d}-spheres, not {k}-spheres")));
        }
    }
    radii
        .par_iter()
        .map(|&r| {
            let sphere = generator.build(space, r)?;
            if sphere.dim() != k {
                return Err(structural(format!("generated a {}-sphere, expected {k}", sphere.dim())));
            }
            let problem = match FillingProblem::new(sphere, r, settings.rho, settings.a) {
                Ok(p) => p.with_layers(settings.layers)?,
                Err(crate::Error::Precondition(_)) => {
                    let point = GrowthPoint { r, volume: None, admissible: false, seed_best: None };
                    return Ok(SweepEntry { point, best: None });
                }
                Err(e) => return Err(e),
            };
            let start = initial_filling(&problem)?;
            let best = optimize_filling(&problem, &start, &settings.optimizer)?;
            let point = GrowthPoint { r, volume: Some(best.volume), admissible: true, seed_best: Some(best.seed) };
            Ok(SweepEntry { point, best: Some(best) })
        })
        .collect()
}

/// [`sweep_fillings`] reduced to a growth series with its fit. Inadmissible
/// radii stay in the series and are left out of the fit.
pub fn estimate_divergence(
    space: &ModelSpace,
    k: usize,
    radii: &[f64],
    generator: &SphereGenerator,
    settings: &SweepSettings,
) -> Result<GrowthSeries> {
    let entries = sweep_fillings(space, k, radii, generator, settings)?;
    GrowthSeries::from_values(entries.into_iter().map(|e| e.point).collect())
}
