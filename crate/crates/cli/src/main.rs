use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ridesim_cli::commands;
use ridesim_cli::{CliError, Loaded};

/// Agent-based ride-sourcing simulator with behavioural and random drivers.
#[derive(Debug, Parser)]
#[command(name = "ridesim", version)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for `run`; master seed for `calibrate` and `sweep`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep cells (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One simulation: trips, drivers, offers and summary CSVs.
    Run,
    /// Calibrate the random-class acceptance probability.
    Calibrate,
    /// Share x replication sweep with trend and distribution outputs.
    Sweep,
    /// Acceptance-probability curves per attribute.
    Sensitivity,
    /// Load the configured network and report its size.
    ValidateGraph,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut loaded = Loaded::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        match cli.command {
            Command::Run => loaded.config.seed = seed,
            _ => loaded.config.sweep.master_seed = seed,
        }
    }
    if let Some(jobs) = cli.jobs {
        loaded.config.sweep.jobs = jobs;
    }
    loaded.check()?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Run => {
            let r = commands::cmd_run(&loaded, out)?;
            println!(
                "{} requests, {} completed, {} offers -> {}",
                r.trips.len(),
                r.count(ridesim_core::engine::RequestStatus::Completed),
                r.offers.len(),
                out.display()
            );
        }
        Command::Calibrate => {
            let cal = commands::cmd_calibrate(&loaded, out)?;
            println!(
                "random_accept_prob = {}  ({} / {} offers accepted)",
                cal.probability(),
                cal.pooled_accepts,
                cal.pooled_offers
            );
        }
        Command::Sweep => {
            let s = commands::cmd_sweep(&loaded, out, cli.plots)?;
            if let Some(p) = s.scenario.random_accept_prob {
                println!("random_accept_prob = {p}");
            }
            println!("{} cells -> {}", s.cells.len(), out.display());
        }
        Command::Sensitivity => {
            let s = commands::cmd_sensitivity(&loaded, out, cli.plots)?;
            for (a, dp) in &s.ranking {
                println!("{:<10} delta_p = {dp:.4}", a.id());
            }
        }
        Command::ValidateGraph => {
            let r = commands::cmd_validate_graph(&loaded)?;
            println!(
                "ok: {} nodes, {} edges ({} in the central zone), all-pairs cache {}",
                r.nodes,
                r.edges,
                r.central_edges,
                if r.cached { "on" } else { "off" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
