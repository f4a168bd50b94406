//! `revloc`: ingest a corpus, build the revision graph, compute fixing
//! features, train, rank and evaluate, all driven by one config file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use revloc_model::EvalOptions;

use config::{Overrides, PipelineConfig};

#[derive(Parser)]
#[command(name = "revloc", version, about = "Locate faulty methods from bug reports")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(short, long, global = true, default_value = "revloc.toml")]
    config: PathBuf,
    /// Override the config's corpus path.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize the raw corpus and write `corpus.jsonl` and a summary.
    Ingest,
    /// Build or incrementally update the revision graph store.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Write rcfs/bffs/bfrs for every report and before-fix method.
    Features,
    /// Train on every fixed report and write the checkpoint.
    Train,
    /// Rank the methods of a report's before-fix revision.
    Rank {
        #[arg(long)]
        report: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Train and test every fold task and write per-task and mean metrics.
    Eval {
        /// Test only on reports that name none of their faulty methods.
        #[arg(long)]
        not_localized_only: bool,
    },
    /// Write a synthetic raw corpus (no config needed; seed defaults to 7).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        reports: usize,
    },
}

#[derive(Subcommand)]
enum GraphAction {
    Build,
    Update,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Command::Synth { out, reports } = &cli.command {
        return commands::synth(out, *reports, cli.seed.unwrap_or(7));
    }
    let overrides = Overrides {
        corpus: cli.corpus,
        output: cli.output,
        seed: cli.seed,
    };
    let cfg = PipelineConfig::load(&cli.config, &overrides)?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Graph { action: GraphAction::Build } => commands::graph_build(&cfg),
        Command::Graph { action: GraphAction::Update } => commands::graph_update(&cfg),
        Command::Features => commands::features(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Rank { report, top } => commands::rank(&cfg, &report, top, &mut std::io::stdout().lock()),
        Command::Eval { not_localized_only } => commands::eval(&cfg, EvalOptions { not_localized_only }),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("revloc: {e:#}");
            ExitCode::FAILURE
        }
    }
}
