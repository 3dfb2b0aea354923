//! The named experiment registry behind the `divkit` binary.
//!
//! Every experiment writes plot-ready CSV files, one verification report
//! (JSON) per group of assertions, and `summary.json` into its output
//! directory. Reports store each assertion as `measured <relation> bound`
//! so [`verify_report`] can re-check them later from the stored artifacts.

mod runs;

pub use runs::leaf_oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::divergence::{GrowthFit, GrowthSeries, OptimizerConfig};
use crate::error::{domain, structural};
use crate::geometry::{Factor, ModelSpace};
use crate::{Error, Result};

pub const REGISTRY: [&str; 8] = [
    "div0-hyperbolic",
    "pulloff-cubic",
    "suspend-exp",
    "product-hardfill",
    "embedding-check",
    "leaf-separation",
    "perturb-suite",
    "straighten-demo",
];

/// One-line description of a registry entry.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "div0-hyperbolic" => "outside-ball paths between antipodal points in H^2 and R^2; circle length oracle",
        "pulloff-cubic" => "pull-off filling areas of flat circles in H^2 x R^2 against 35 A r^3",
        "suspend-exp" => "suspension checks and optimized fillings of suspended antipodal pairs in H^2 x R",
        "product-hardfill" => "optimized fillings of flat circles in H^2 x H^2 with leaf slice certificates",
        "embedding-check" => "path length sandwich in the embedded leaves of H^2 x H^2, nonconvexity gap",
        "leaf-separation" => "distance between points on different leaves against their leaf separation",
        "perturb-suite" => "random planar loops pushed off the unit disc, all three branches",
        "straighten-demo" => "transport of sphere maps, radial projection, straightening of a net",
        _ => return None,
    })
}

/// Scalar settings of an experiment. Unset fields take the experiment's own
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub k: Option<usize>,
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub depth: Option<usize>,
    pub layers: Option<usize>,
    pub seeds: Option<usize>,
    pub rng_seed: Option<u64>,
    pub samples: Option<usize>,
    pub max_iters: Option<usize>,
    pub refine_rounds: Option<usize>,
    pub tolerance: Option<f64>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Space descriptor such as `H2xR2`.
    pub space: Option<String>,
    pub params: ExperimentParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub space: Option<String>,
    pub params: ExperimentParams,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    /// Fails with a usage error for names outside [`REGISTRY`].
    pub fn new(name: &str, output_dir: impl Into<PathBuf>) -> Result<Self> {
        if !REGISTRY.contains(&name) {
            return Err(Error::Usage(format!("unknown experiment '{name}'; known: {}", REGISTRY.join(", "))));
        }
        Ok(ExperimentSpec { name: name.to_string(), space: None, params: ExperimentParams::default(), output_dir: output_dir.into() })
    }

    pub fn with_config(mut self, config: ExperimentConfig) -> Self {
        self.space = config.space;
        self.params = config.params;
        self
    }

    fn space_or(&self, default: &str) -> Result<ModelSpace> {
        parse_space(self.space.as_deref().unwrap_or(default))
    }

    fn rng_seed(&self) -> u64 {
        self.params.rng_seed.unwrap_or(0)
    }

    /// Optimizer settings: `base` overridden by whatever the params set.
    fn optimizer(&self, base: OptimizerConfig) -> OptimizerConfig {
        let p = &self.params;
        OptimizerConfig {
            max_iters: p.max_iters.unwrap_or(base.max_iters),
            seeds: p.seeds.unwrap_or(base.seeds),
            refine_rounds: p.refine_rounds.unwrap_or(base.refine_rounds),
            tolerance: p.tolerance.unwrap_or(base.tolerance),
            rng_seed: p.rng_seed.unwrap_or(base.rng_seed),
            ..base
        }
    }
}

/// Parses descriptors like `H2`, `R2`, `H2xR2`, `H2xH2` (`×` also accepted).
pub fn parse_space(desc: &str) -> Result<ModelSpace> {
    let factors = desc
        .split(['x', 'X', '×'])
        .map(|tok| {
            let tok = tok.trim();
            let dim = tok.get(1..).and_then(|d| d.parse::<usize>().ok()).filter(|&d| d > 0);
            match (tok.chars().next(), dim) {
                (Some('H' | 'h'), Some(d)) => Ok(Factor::hyperbolic(d)),
                (Some('R' | 'r' | 'E' | 'e'), Some(d)) => Ok(Factor::euclidean(d)),
                _ => Err(Error::Usage(format!("bad factor '{tok}' in space '{desc}'"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ModelSpace::new(factors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// `measured <relation> bound`. A missing measurement (the quantity could
/// not be computed, e.g. a failed fit) never passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: Option<f64>,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Assertion {
    fn new(name: impl Into<String>, measured: Option<f64>, relation: Relation, bound: f64) -> Self {
        let measured = measured.filter(|m| m.is_finite());
        let mut a = Assertion { name: name.into(), measured, relation, bound, passed: false };
        a.passed = a.holds();
        a
    }

    pub fn at_most(name: impl Into<String>, measured: impl Into<Option<f64>>, bound: f64) -> Self {
        Assertion::new(name, measured.into(), Relation::AtMost, bound)
    }

    pub fn at_least(name: impl Into<String>, measured: impl Into<Option<f64>>, bound: f64) -> Self {
        Assertion::new(name, measured.into(), Relation::AtLeast, bound)
    }

    /// Re-evaluates the relation (ignores the stored verdict).
    pub fn holds(&self) -> bool {
        match (self.measured, self.relation) {
            (Some(m), Relation::AtMost) => m <= self.bound,
            (Some(m), Relation::AtLeast) => m >= self.bound,
            (None, _) => false,
        }
    }
}

/// A growth series stored next to a report, with the fit it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub csv: String,
    pub fit: Option<GrowthFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub check: String,
    pub assertions: Vec<Assertion>,
    pub series: Vec<SeriesRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub pass_count: usize,
    pub fail_count: usize,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct ExitReport {
    pub summary: Summary,
    pub reports: Vec<VerificationReport>,
    /// Every file written, in order.
    pub files: Vec<PathBuf>,
}

impl ExitReport {
    pub fn success(&self) -> bool {
        self.summary.fail_count == 0
    }

    /// `check/assertion` names of the failing assertions.
    pub fn failures(&self) -> Vec<String> {
        self.reports
            .iter()
            .flat_map(|r| r.assertions.iter().filter(|a| !a.passed).map(move |a| format!("{}/{}", r.check, a.name)))
            .collect()
    }
}

/// Collects the artifacts of one run inside its output directory.
struct Output {
    experiment: String,
    dir: PathBuf,
    files: Vec<PathBuf>,
    reports: Vec<VerificationReport>,
}

impl Output {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn series(&mut self, name: &str, series: &GrowthSeries) -> Result<SeriesRecord> {
        let path = self.path(name);
        series.write_csv(fs::File::create(path)?)?;
        Ok(SeriesRecord { csv: name.to_string(), fit: series.fit })
    }

    /// Writes a plain CSV table (header first, LF endings).
    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn report(&mut self, check: &str, assertions: Vec<Assertion>, series: Vec<SeriesRecord>) -> Result<()> {
        let report = VerificationReport { experiment: self.experiment.clone(), check: check.to_string(), assertions, series };
        let path = self.path(&format!("{check}.json"));
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
        self.reports.push(report);
        Ok(())
    }
}

/// Runs one registry experiment and writes its artifacts. Numerical
/// assertion failures are reported in the result, not as errors.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExitReport> {
    let start = Instant::now();
    fs::create_dir_all(&spec.output_dir)?;
    let mut out = Output { experiment: spec.name.clone(), dir: spec.output_dir.clone(), files: vec![], reports: vec![] };
    match spec.name.as_str() {
        "div0-hyperbolic" => runs::div0_hyperbolic(spec, &mut out)?,
        "pulloff-cubic" => runs::pulloff_cubic(spec, &mut out)?,
        "suspend-exp" => runs::suspend_exp(spec, &mut out)?,
        "product-hardfill" => runs::product_hardfill(spec, &mut out)?,
        "embedding-check" => runs::embedding_check(spec, &mut out)?,
        "leaf-separation" => runs::leaf_separation(spec, &mut out)?,
        "perturb-suite" => runs::perturb_suite(spec, &mut out)?,
        "straighten-demo" => runs::straighten_demo(spec, &mut out)?,
        other => return Err(Error::Usage(format!("unknown experiment '{other}'"))),
    }
    let all: Vec<&Assertion> = out.reports.iter().flat_map(|r| &r.assertions).collect();
    let pass_count = all.iter().filter(|a| a.passed).count();
    let summary = Summary {
        experiment: spec.name.clone(),
        pass_count,
        fail_count: all.len() - pass_count,
        wall_time: start.elapsed().as_secs_f64(),
    };
    let path = out.path("summary.json");
    fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    Ok(ExitReport { summary, reports: out.reports, files: out.files })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyOutcome {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyOutcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Agreement required between a stored fit and the refit of its CSV.
const REFIT_TOL: f64 = 1e-9;

/// Re-checks a stored report: every assertion relation is re-evaluated and
/// must hold, and every referenced growth CSV (resolved next to the report)
/// is refitted and must reproduce the stored fit.
pub fn verify_report(path: &Path) -> Result<VerifyOutcome> {
    let report: VerificationReport = serde_json::from_str(&fs::read_to_string(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut outcome = VerifyOutcome::default();
    for a in &report.assertions {
        outcome.checked += 1;
        if !a.holds() {
            outcome.failures.push(format!("{}: {:?} {:?} {} does not hold", a.name, a.measured, a.relation, a.bound));
        } else if !a.passed {
            outcome.failures.push(format!("{}: stored verdict disagrees with the numbers", a.name));
        }
    }
    for s in &report.series {
        outcome.checked += 1;
        let series = GrowthSeries::read_csv(fs::File::open(dir.join(&s.csv))?)?;
        if !fits_agree(series.fit.as_ref(), s.fit.as_ref()) {
            outcome.failures.push(format!("{}: refit {:?} differs from stored {:?}", s.csv, series.fit, s.fit));
        }
    }
    Ok(outcome)
}

fn fits_agree(a: Option<&GrowthFit>, b: Option<&GrowthFit>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => {
            let close = |x: f64, y: f64| (x - y).abs() <= REFIT_TOL * x.abs().max(1.0);
            a.kind == b.kind
                && close(a.parameter, b.parameter)
                && close(a.r_squared, b.r_squared)
                && close(a.alternative.parameter, b.alternative.parameter)
                && close(a.alternative.r_squared, b.alternative.r_squared)
        }
        _ => false,
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(structural(msg))
    }
}

fn positive_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain(format!("radii must be positive and strictly increasing, got {radii:?}")));
    }
    Ok(())
}
