use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use surfcalc::config::{list_builtins, Scenario};
use surfcalc::runner::{run, Bound};

#[derive(Parser)]
#[command(name = "surfcalc", about = "Verification suites for fluids on evolving surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a scenario file.
    Run {
        file: PathBuf,
        /// Run only this suite.
        #[arg(long)]
        suite: Option<String>,
        /// Output directory (default: the scenario's `output.dir`, else `out/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the catalog of built-in surfaces, motions, fields and laws.
    ListBuiltins {
        #[arg(long)]
        json: bool,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { file, suite, out } => {
            let sc = match Scenario::load(&file) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(2);
                }
            };
            let dir = out
                .or_else(|| sc.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
            match run(&sc, suite.as_deref(), Some(&dir)) {
                Ok(summary) => {
                    for s in &summary.suites {
                        let ok = s.checks.iter().filter(|c| c.passed).count();
                        println!("{:<24} {} ({ok}/{})", s.suite, if s.passed { "pass" } else { "FAIL" }, s.checks.len());
                        for c in s.checks.iter().filter(|c| !c.passed) {
                            let rel = match c.bound {
                                Bound::AtMost => format!("<= {:e}", c.tolerance),
                                Bound::AtLeast => format!(">= {}", c.tolerance),
                                Bound::Within { target } => format!("= {target} ± {}", c.tolerance),
                            };
                            println!("    {}: {:e} (needs {rel})", c.name, c.value);
                        }
                    }
                    println!("summary: {}", dir.join("summary.json").display());
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::ListBuiltins { json } => {
            let all = list_builtins();
            if json {
                match serde_json::to_string_pretty(&all) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            } else {
                for b in all {
                    println!("{:<9} {:<14} {:<40} {}", b.category, b.name, b.signature, b.description);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("surfcalc {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
