use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rgg_core::runner::{parse_certifiers, run, write_outputs, Scenario};
use rgg_core::Error;

/// Certify metric-measure properties of epsilon-graphs sampled from a manifold.
#[derive(Parser, Debug)]
#[command(name = "certify", version)]
struct Args {
    /// Scenario file (flat `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for seeds.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Comma-separated subset of the configured certifiers.
    #[arg(long)]
    only: Option<String>,
}

const EXIT_HARD_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut scenario = match Scenario::from_text(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(only) = &args.only {
        match parse_certifiers(only) {
            Ok(list) => scenario.restrict(&list),
            Err(e) => {
                eprintln!("--only: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let output = match run(&scenario, args.workers) {
        Ok(o) => o,
        Err(e @ (Error::Config { .. } | Error::Domain(_))) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let summary = match write_outputs(&args.out, &output) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot write outputs: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &summary.certifiers {
        println!(
            "{:<16} n={:<6} pass {}/{}{}{}",
            c.certifier,
            c.n,
            c.passes,
            c.runs,
            c.floor.map(|f| format!(" floor {f:.4}")).unwrap_or_default(),
            if c.report_only { " (report only)" } else { "" }
        );
    }
    if output.hard_violation() {
        eprintln!("hard violation recorded");
        return ExitCode::from(EXIT_HARD_VIOLATION);
    }
    ExitCode::SUCCESS
}
