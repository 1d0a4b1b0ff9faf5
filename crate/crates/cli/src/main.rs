use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use freebound::experiment::{self, RunOptions};

#[derive(Parser)]
#[command(name = "freebound", version, about = "Free boundary lab: solve, measure, report")]
struct Cli {
    /// Directory for CSV and JSON artifacts (overrides the config and FREEBOUND_OUTPUT_DIR).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized analyses (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only print the final verdict.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Show the shipped fixture configs.
    ListFixtures {
        /// Fixture directory; defaults to ./fixtures, then the one in the source tree.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn fixture_dir(explicit: Option<PathBuf>) -> PathBuf {
    if let Some(d) = explicit {
        return d;
    }
    let local = PathBuf::from("fixtures");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                output_dir: cli.output_dir,
                seed: cli.seed,
                quiet: cli.quiet,
            };
            let manifest = experiment::run(&config, &opts)
                .with_context(|| format!("running {}", config.display()))?;
            if !cli.quiet {
                for c in &manifest.checks {
                    let res = c.resolution.map_or(String::new(), |r| format!(" @{r}"));
                    println!(
                        "{} {}{}: value {:.6e}, threshold {:.6e}, margin {:.3e}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        res,
                        c.value,
                        c.threshold,
                        c.margin
                    );
                }
            }
            println!(
                "{}: {} ({})",
                if manifest.all_passed { "PASS" } else { "FAIL" },
                config.display(),
                manifest.output_dir.join("manifest.json").display()
            );
            Ok(manifest.all_passed)
        }
        Command::ListFixtures { dir } => {
            let dir = fixture_dir(dir);
            let rows = experiment::list_fixtures(&dir)
                .with_context(|| format!("reading {}", dir.display()))?;
            for r in &rows {
                println!("{}\t{}\t{}\t{}", r.file, r.name, r.exercises, r.expected);
            }
            Ok(true)
        }
    }
}
