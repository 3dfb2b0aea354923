use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use divkit::experiments::{describe, run_experiment, verify_report, ExperimentConfig, ExperimentSpec, REGISTRY};

#[derive(Parser)]
#[command(name = "divkit", version, about = "Experiments on higher divergence of hyperbolic and Euclidean products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registry experiment.
    Run {
        name: String,
        /// JSON file with `space` and `params`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma separated radii, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the registry.
    List,
    /// Re-check a stored verification report.
    Verify { report: PathBuf },
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("DIVKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("DIVKIT_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        bail!("DIVKIT_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for name in REGISTRY {
                println!("{name:<18} {}", describe(name).unwrap_or(""));
            }
            Ok(true)
        }
        Command::Run { name, config, radii, seed, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            let mut spec = ExperimentSpec::new(&name, out)?;
            if let Some(path) = config {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let cfg: ExperimentConfig =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                spec = spec.with_config(cfg);
            }
            if radii.is_some() {
                spec.params.radii = radii;
            }
            if seed.is_some() {
                spec.params.rng_seed = seed;
            }
            let report = run_experiment(&spec).with_context(|| format!("experiment {name} failed"))?;
            for failure in report.failures() {
                eprintln!("FAIL {failure}");
            }
            println!(
                "{}: {} passed, {} failed in {:.1}s; artifacts in {}",
                report.summary.experiment,
                report.summary.pass_count,
                report.summary.fail_count,
                report.summary.wall_time,
                spec.output_dir.display()
            );
            Ok(report.success())
        }
        Command::Verify { report } => {
            let outcome = verify_report(&report).with_context(|| format!("verifying {}", report.display()))?;
            for failure in &outcome.failures {
                eprintln!("FAIL {failure}");
            }
            println!("{}: {} checks, {} failed", report.display(), outcome.checked, outcome.failures.len());
            Ok(outcome.success())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| matches!(c.downcast_ref::<divkit::Error>(), Some(divkit::Error::Usage(_))));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
