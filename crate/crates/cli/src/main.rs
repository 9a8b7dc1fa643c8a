use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fpklab::harness::{benchmark, run_experiment, ExperimentConfig, BENCHMARKS};

#[derive(Parser)]
#[command(name = "fpklab", version, about = "Fractional Fokker-Planck-Kolmogorov solvers and cross-checks")]
struct Cli {
    /// Directory for report.json, CSV and SVG artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML file or a shipped benchmark name.
    Run { config: String },
    /// List the shipped benchmark configurations.
    ListBenchmarks,
    /// Run every shipped benchmark and report pass/fail.
    Verify,
}

fn load(config: &str) -> Result<ExperimentConfig> {
    let path = Path::new(config);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {config}"))?;
        Ok(ExperimentConfig::from_toml(&text)?)
    } else {
        benchmark(config).with_context(|| format!("`{config}` is neither a file nor a shipped benchmark"))
    }
}

fn execute(mut cfg: ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if out.is_some() {
        cfg.output_dir = out;
    }
    let start = Instant::now();
    let outcome = run_experiment(&cfg).with_context(|| format!("experiment {}", cfg.name))?;
    let report = &outcome.report;
    for c in &report.checks {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("  {tag} {:<44} error {:.3e}  tolerance {:.1e}  {}", c.name, c.error, c.tolerance, c.note);
    }
    for r in report.routes.iter().filter(|r| !r.completed) {
        println!("  route {} failed: {}", r.route, r.error.as_deref().unwrap_or(""));
    }
    println!(
        "{} {} ({} checks, {} failed, {:.1}s)",
        if report.passed { "PASS" } else { "FAIL" },
        cfg.name,
        report.checks.len(),
        report.failures().len(),
        start.elapsed().as_secs_f64()
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::ListBenchmarks => {
            for b in BENCHMARKS {
                let description = benchmark(b.name).map(|c| c.description).unwrap_or_default();
                println!("{:<24} {description}", b.name);
            }
            Ok(true)
        }
        Command::Run { config } => load(&config).and_then(|cfg| execute(cfg, cli.seed, cli.out)),
        Command::Verify => {
            let mut all = true;
            for b in BENCHMARKS {
                let out = cli.out.as_ref().map(|d| d.join(b.name));
                match benchmark(b.name).map_err(anyhow::Error::from).and_then(|cfg| execute(cfg, cli.seed, out)) {
                    Ok(passed) => all &= passed,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        all = false;
                    }
                }
            }
            Ok(all)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
