//! `edakit` — end-to-end EDA pipeline driver.
//!
//! Subcommands wire the library stages together:
//! ingest -> preprocess -> window -> train -> embed / features ->
//! probe / evaluate, plus `augment-preview`, `bench` and
//! `corpus-stats`. Every run writes its fully resolved configuration
//! next to its outputs, and reruns with identical inputs and seeds
//! reproduce identical artifacts.
//!
//! Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric/convergence
//! error.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "edakit", version, about = "Wearable EDA processing and evaluation pipeline")]
struct Cli {
    /// Optional TOML config file; command flags override its values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an E4-style source tree into a binary archive + manifest.
    Ingest(commands::ingest::IngestArgs),
    /// Filter and decompose every archived recording.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Cut decomposed recordings into 60 s window shards.
    Window(commands::window::WindowArgs),
    /// Emit before/after CSV for each augmentation kind.
    #[command(name = "augment-preview")]
    AugmentPreview(commands::augment_preview::AugmentPreviewArgs),
    /// Contrastive training of the encoder on window shards.
    Train(commands::train::TrainArgs),
    /// Frozen-encoder embeddings for window shards.
    Embed(commands::embed::EmbedArgs),
    /// Handcrafted feature extraction for window shards.
    Features(commands::features::FeaturesArgs),
    /// Linear probing of one feature file under one CV protocol.
    Probe(commands::probe::ProbeArgs),
    /// Multi-method evaluation with dummies and rank statistics.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// CPU-time and FLOP accounting for the feature extractors.
    Bench(commands::bench::BenchArgs),
    /// Per-dataset hours, users and value histograms of an archive.
    #[command(name = "corpus-stats")]
    CorpusStats(commands::corpus_stats::CorpusStatsArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args, cli.config.as_deref()),
        Command::Preprocess(args) => commands::preprocess::run(args, cli.config.as_deref()),
        Command::Window(args) => commands::window::run(args, cli.config.as_deref()),
        Command::AugmentPreview(args) => {
            commands::augment_preview::run(args, cli.config.as_deref())
        }
        Command::Train(args) => commands::train::run(args, cli.config.as_deref()),
        Command::Embed(args) => commands::embed::run(args, cli.config.as_deref()),
        Command::Features(args) => commands::features::run(args, cli.config.as_deref()),
        Command::Probe(args) => commands::probe::run(args, cli.config.as_deref()),
        Command::Evaluate(args) => commands::evaluate::run(args, cli.config.as_deref()),
        Command::Bench(args) => commands::bench::run(args, cli.config.as_deref()),
        Command::CorpusStats(args) => commands::corpus_stats::run(args, cli.config.as_deref()),
    };
    if let Err(err) = result {
        // Machine-readable error record on stderr.
        eprintln!(
            "{}",
            serde_json::json!({
                "error": err.code_name(),
                "message": err.to_string(),
            })
        );
        std::process::exit(err.exit_code());
    }
}
