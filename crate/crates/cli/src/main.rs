use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netsir::config::ExperimentConfig;
use netsir::{resolve, run, write_outputs, CliError, Command, Overrides};

/// Optimal and heuristic intervention for SIR rumor spreading on networks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Verb,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: the config's `out`, else ./out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for generators and randomised heuristics; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Strategy name, e.g. optimal, un, dc+, bc-, dra, unc. Repeatable.
    #[arg(long = "strategy", global = true)]
    strategies: Vec<String>,
}

#[derive(Subcommand)]
enum Verb {
    /// Topology statistics of a network.
    Stats {
        /// Edge list to read instead of the config's network.
        edges: Option<PathBuf>,
    },
    /// All centrality vectors of a network.
    Centrality { edges: Option<PathBuf> },
    /// Integrate the model under fixed strategies (default: unc).
    Simulate { edges: Option<PathBuf> },
    /// Solve for the optimal control.
    Optimize { edges: Option<PathBuf> },
    /// Run several strategies and tabulate peak and area (default: all).
    Compare { edges: Option<PathBuf> },
    /// Correlate the optimal weights with centralities over time.
    Correlate { edges: Option<PathBuf> },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (cmd, edges) = match cli.command {
        Verb::Stats { edges } => (Command::Stats, edges),
        Verb::Centrality { edges } => (Command::Centrality, edges),
        Verb::Simulate { edges } => (Command::Simulate, edges),
        Verb::Optimize { edges } => (Command::Optimize, edges),
        Verb::Compare { edges } => (Command::Compare, edges),
        Verb::Correlate { edges } => (Command::Correlate, edges),
    };
    let mut cfg = match (&cli.config, edges) {
        (Some(path), edges) => {
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(e) = edges {
                cfg.network = netsir::NetworkSource::File { path: e };
            }
            cfg
        }
        (None, Some(e)) => ExperimentConfig::for_edge_list(e),
        (None, None) => return Err(CliError::Config("give an edge-list path or --config".into())),
    };
    let overrides = Overrides { seed: cli.seed, strategies: cli.strategies, out: cli.out };
    cfg = resolve(cfg, cmd, &overrides)?;
    let output = run(cmd, &cfg)?;
    for n in &output.notes {
        eprintln!("note: {n}");
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    for f in &output.failures {
        eprintln!("error: {f}");
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&dir, &output)?;
    print!("{}", output.summary);
    println!("wrote {} files to {}", output.files.len(), dir.display());
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
