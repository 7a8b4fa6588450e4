use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weyl_core::catalog;
use weyl_lab::config::{parse_tol, RunConfig};
use weyl_lab::report::{summary_table, verify, Report};
use weyl_lab::{run_with_jobs, Overrides};

#[derive(Parser)]
#[command(
    name = "weyl-lab",
    version,
    about = "Curvature identity battery for conformally recurrent metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured checks and emit a JSON report.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Catalog name, or a JSON object `{"name": ..., "params": ...}`.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// A point count, or a JSON list of coordinate lists.
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance override `KEY=VAL`; repeatable.
        #[arg(long = "tol", value_parser = parse_tol)]
        tol: Vec<(String, f64)>,
        /// Comma-separated check groups, or `all`.
        #[arg(long)]
        checks: Option<String>,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List catalog metrics and their parameters.
    Catalog,
    /// Re-check a saved report's verdicts against its stored defects.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            metric,
            n,
            points,
            seed,
            tol,
            checks,
            out,
            jobs,
        } => run(
            config,
            Overrides {
                metric,
                n,
                points,
                seed,
                tol,
                checks,
                out,
            },
            jobs,
        ),
        Command::Catalog => {
            for e in catalog() {
                println!("{}\n  {}\n  params: {}", e.name, e.summary, e.params);
                println!("  example: {}", serde_json::to_string(&e.example).expect("serializes"));
            }
            0
        }
        Command::Verify { report } => verify_file(&report),
    };
    ExitCode::from(code as u8)
}

fn run(config: Option<PathBuf>, overrides: Overrides, jobs: Option<usize>) -> i32 {
    let base = match config.as_deref().map(RunConfig::load).transpose() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cfg = match overrides.apply(base) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let report = match run_with_jobs(&cfg, jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let table = summary_table(&report);
    match &cfg.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
            print!("{table}");
        }
        None => {
            println!("{json}");
            eprint!("{table}");
        }
    }
    report.verdict.exit_code
}

fn verify_file(path: &std::path::Path) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let report: Report = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: not a report: {e}");
            return 2;
        }
    };
    let outcome = verify(&report);
    for name in &outcome.inconsistent {
        println!("inconsistent status: {name}");
    }
    if outcome.verdict_mismatch {
        println!("stored summary or verdict differs from the recomputed one");
    }
    println!(
        "recomputed verdict: {} ({} failing checks)",
        if outcome.recomputed.passed { "PASS" } else { "FAIL" },
        outcome.recomputed.failed_checks.len()
    );
    outcome.exit_code()
}
