//! Command-line front end: parse a check script, run its goals, print a
//! human-readable report, and optionally write a deterministic JSON report.
//!
//! Exit codes: 0 = every goal came out as the script expects, 1 = some
//! goal did not, 2 = usage, parse or elaboration error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rg_kernel::dsl;
use rg_kernel::laws::LAW_IDS;
use rg_kernel::refine::Engine;
use rg_kernel::runner::{self, RunOptions};

#[derive(Parser)]
#[command(name = "rg-check", version, about = "Refinement-calculus checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the goals of a check script.
    Check {
        /// Path to the script file.
        file: String,
        /// Default trace depth for goals that do not set one.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Default engine: enum or graph.
        #[arg(long, default_value = "graph")]
        engine: String,
        /// Also check laws from the catalogue on seeded random bindings:
        /// "all" or a comma-separated list of law ids.
        #[arg(long)]
        laws: Option<String>,
        /// Write the JSON report to this path.
        #[arg(long)]
        json: Option<String>,
        /// Seed for sampled bindings (falls back to RG_KERNEL_SEED, then 42).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of worker threads for goal execution.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Check {
        file,
        depth,
        engine,
        laws,
        json,
        seed,
        jobs,
    } = cli.command;

    let engine: Engine = match engine.parse() {
        Ok(e) => e,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let seed = seed
        .or_else(|| {
            std::env::var("RG_KERNEL_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(42);

    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {file}: {e}");
            return ExitCode::from(2);
        }
    };
    let mut script = match dsl::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{file}:{e}");
            return ExitCode::from(2);
        }
    };

    // --laws appends synthetic law goals after the script's own
    if let Some(spec) = laws {
        let ids: Vec<String> = if spec == "all" {
            LAW_IDS.iter().map(|s| s.to_string()).collect()
        } else {
            spec.split(',').map(|s| s.trim().to_string()).collect()
        };
        for id in ids {
            if !LAW_IDS.contains(&id.as_str()) {
                eprintln!("error: unknown law id {id:?}");
                return ExitCode::from(2);
            }
            let line = script.goals.last().map(|g| g.line).unwrap_or(0);
            script.goals.push(dsl::Goal {
                body: dsl::GoalBody::Law { id, samples: None },
                depth: None,
                engine: None,
                expect_fail: false,
                line,
            });
        }
    }

    let opts = RunOptions {
        depth,
        engine,
        seed,
        jobs,
        ..Default::default()
    };
    let report = runner::run(&script, &opts);
    print!("{}", runner::render_human(&report));
    if let Some(path) = json {
        let rendered = runner::render_json(&report);
        if let Err(e) = std::fs::write(&path, rendered) {
            eprintln!("error: cannot write {path}: {e}");
            return ExitCode::from(2);
        }
    }
    if report.all_as_expected() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
