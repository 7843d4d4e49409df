//! Command-line front end for the advertoscope library.

mod analyze;
mod cache;
mod corpus;
mod data;
mod model;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "advertoscope", version, about = "Detect problematic advertorials and audit disclosure practices")]
pub struct Cli {
    /// Optional TOML run configuration; flags override its values.
    #[arg(long, global = true, env = "ADVERTOSCOPE_CONFIG")]
    pub config: Option<PathBuf>,

    /// Never touch the network.
    #[arg(long, global = true, env = "ADVERTOSCOPE_OFFLINE", value_parser = clap::builder::FalseyValueParser::new())]
    pub offline: bool,

    /// Zero report timestamps and fix seeds so reruns are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,

    /// Directory holding refreshed suffix list and RDAP bootstrap files.
    #[arg(long, global = true, env = "ADVERTOSCOPE_DATA")]
    pub data_dir: Option<PathBuf>,

    /// Download the current public suffix list into the data directory.
    #[arg(long, global = true)]
    pub refresh_psl: bool,

    /// Download the current IANA RDAP bootstrap registry into the data directory.
    #[arg(long, global = true)]
    pub refresh_rdap_bootstrap: bool,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the two-stage detector and disclosure audit over pages.
    Analyze(analyze::AnalyzeArgs),
    /// Train a forest from labelled engine signals.
    Train(model::TrainArgs),
    /// Repeated stratified 80/20 evaluation.
    CrossValidate(model::CrossValidateArgs),
    /// Keep the most important features up to a cumulative share.
    SelectFeatures(model::SelectArgs),
    /// Cross-validate a hyperparameter grid.
    Tune(model::TuneArgs),
    /// Type-token ratio and Linsear-Write of a text.
    Metrics(corpus::MetricsArgs),
    /// Corpus-level size, third-party and distribution statistics.
    CorpusStats(corpus::CorpusStatsArgs),
    /// Difference-hash images and report near duplicates.
    HashImages(corpus::HashImagesArgs),
    /// Look up domain registration data.
    Rdap(corpus::RdapArgs),
    /// Inspect or compact the engine report cache.
    Cache(cache::CacheArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<u8> {
    let settings = settings::Settings::load(&cli)?;
    if cli.refresh_psl {
        data::refresh_psl(&settings)?;
    }
    if cli.refresh_rdap_bootstrap {
        data::refresh_rdap_bootstrap(&settings)?;
    }
    let Some(command) = cli.command else {
        if cli.refresh_psl || cli.refresh_rdap_bootstrap {
            return Ok(0);
        }
        anyhow::bail!("no subcommand given; see --help");
    };
    match command {
        Command::Analyze(a) => analyze::run(&settings, a),
        Command::Train(a) => model::train(&settings, a),
        Command::CrossValidate(a) => model::cross_validate(&settings, a),
        Command::SelectFeatures(a) => model::select(&settings, a),
        Command::Tune(a) => model::tune(&settings, a),
        Command::Metrics(a) => corpus::metrics(a),
        Command::CorpusStats(a) => corpus::corpus_stats(&settings, a),
        Command::HashImages(a) => corpus::hash_images(&settings, a),
        Command::Rdap(a) => corpus::rdap(&settings, a),
        Command::Cache(a) => cache::run(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
