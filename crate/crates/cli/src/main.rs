use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ketbridge::experiments::{bundled, list_scenarios, load_scenario, run, write_outputs, ScenarioConfig};

#[derive(Parser)]
#[command(name = "ketbridge", version, about = "Run ket-transform convergence scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a bundled scenario by name.
    Run {
        scenario: Option<String>,
        /// Output directory; defaults to the file's `out.dir`, then `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run a single sweep.
        #[arg(long)]
        only: Option<String>,
        /// Exit nonzero when any property or sweep fails.
        #[arg(long)]
        hard_fail: bool,
        /// Print bundled scenario names and exit.
        #[arg(long)]
        list_scenarios: bool,
    },
}

fn resolve(s: &str) -> Result<ScenarioConfig> {
    let path = PathBuf::from(s);
    if path.exists() {
        return load_scenario(&path).with_context(|| format!("loading {}", path.display()));
    }
    if list_scenarios().contains(&s) {
        return Ok(bundled(s)?);
    }
    bail!("`{s}` is neither a file nor a bundled scenario ({})", list_scenarios().join(", "))
}

fn main() -> Result<ExitCode> {
    let Command::Run { scenario, out, only, hard_fail, list_scenarios: list } = Cli::parse().command;
    if list {
        for n in list_scenarios() {
            println!("{n}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let Some(scenario) = scenario else { bail!("missing scenario (file path or bundled name)") };
    let cfg = resolve(&scenario)?;
    let report = run(&cfg, only.as_deref())?;
    let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let paths = write_outputs(&report, &dir)?;
    print!("{}", report.to_text());
    for p in paths {
        println!("wrote {}", p.display());
    }
    if hard_fail && !report.passed() {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
