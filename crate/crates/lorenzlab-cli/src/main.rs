//! Command-line driver: pick suites, run them against one configuration,
//! and write a summary plus CSV tables into the output directory.
//!
//! Exit codes: 0 when every check passes, 1 when the suites ran but some
//! check failed, 2 on configuration or operational errors (including
//! unknown config keys and bad flags).

mod config;
mod output;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::output::{ReportBundle, SuiteOutcome};

#[derive(Parser)]
#[command(
    name = "lorenzlab",
    version,
    about = "Verification suites for a piecewise geometric Lorenz model and its fiber extension"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply when omitted.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    /// Directory for summary.json, the CSV tables and the config echo.
    #[arg(long, value_name = "DIR", default_value = "out", global = true)]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel suites (0 = one per core).
    #[arg(long, value_name = "N", global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Gate every named parameter inequality of the model and the fiber.
    Validate,
    /// Survey return times over a section grid and export a sampled orbit.
    ReturnMap,
    /// Check cone contraction and vector growth over random section points.
    Cones,
    /// Grow cone-tangent curves until they pass the target length.
    Curves,
    /// Check the finite-time exponent ordering in the saddle-node regime.
    Exponents,
    /// Check sectional expansion rates against the model floor.
    Sectional,
    /// Run the neutral-orbit and Floquet-index surgery diagnostics.
    Surgery,
    /// Cross-check the classical system: Lyapunov exponent, origin spectrum.
    ClassicalXcheck,
    /// Run every suite in order.
    All,
}

type Runner = fn(&Config) -> Result<SuiteOutcome>;

fn runners(command: Command) -> Vec<Runner> {
    match command {
        Command::Validate => vec![suites::validate],
        Command::ReturnMap => vec![suites::return_map],
        Command::Cones => vec![suites::cones],
        Command::Curves => vec![suites::curves],
        Command::Exponents => vec![suites::exponents],
        Command::Sectional => vec![suites::sectional],
        Command::Surgery => vec![suites::surgery],
        Command::ClassicalXcheck => vec![suites::classical_xcheck],
        Command::All => vec![
            suites::validate,
            suites::return_map,
            suites::cones,
            suites::curves,
            suites::exponents,
            suites::sectional,
            suites::surgery,
            suites::classical_xcheck,
        ],
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }

    let mut reports = Vec::new();
    let mut tables = Vec::new();
    for runner in runners(cli.command) {
        let outcome = runner(&cfg)?;
        let report = &outcome.report;
        let verdict = if report.all_pass { "PASS" } else { "FAIL" };
        println!(
            "suite {}: {} ({} checks, min margin {:.3e})",
            report.suite,
            verdict,
            report.checks.len(),
            report.min_margin()
        );
        if !report.all_pass {
            println!("  failed: {}", report.failed_ids().join(", "));
        }
        reports.push(outcome.report);
        tables.extend(outcome.tables);
    }

    let all_pass = reports.iter().all(|r| r.all_pass);
    let bundle = ReportBundle {
        tool: "lorenzlab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        all_pass,
        suites: reports,
    };
    output::write_outputs(&cli.out, &cfg, &bundle, &tables)?;
    println!(
        "overall: {} ({} suites); outputs in {}",
        if all_pass { "PASS" } else { "FAIL" },
        bundle.suites.len(),
        cli.out.display()
    );
    Ok(all_pass)
}
