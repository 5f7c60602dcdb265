//! `tweetforge`: batch pipeline and eval scorer.
//!
//! Every subcommand is a pure function of flags and input bytes;
//! rerunning any command reproduces its outputs byte for byte. Exit
//! codes: 0 success, 1 stage failure, 2 usage or config error.

mod config;
mod stages;

use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "tweetforge", version, about = "Deterministic tweet corpus pipeline and eval scorer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Filter a raw tweet stream (length, language, retweets, keywords)
    Ingest(stages::IngestArgs),
    /// Rewrite mentions, URLs, emoji, and (hard mode) lexical variants
    Normalize(stages::NormalizeArgs),
    /// Split text lines into tweet tokens
    Tokenize(stages::TokenizeArgs),
    /// Learn a subword merge table from a normalized corpus
    BpeLearn(stages::BpeLearnArgs),
    /// Segment tweets with a learned merge table
    BpeApply(stages::BpeApplyArgs),
    /// Pack encoded tweets into fixed-length blocks and shard them
    Pack(stages::PackArgs),
    /// Select masked-token training positions for packed blocks
    Mask(stages::MaskArgs),
    /// Score predictions (or a reference predictor) on a labeled dataset
    Eval(stages::EvalArgs),
    /// Deterministically split a dataset into train and validation parts
    Split(stages::SplitArgs),
    /// Average per-seed eval reports into mean/std summaries
    Aggregate(stages::AggregateArgs),
    /// Execute a preset pipeline described by a TOML config
    Run(config::RunArgs),
}

/// Usage/config problems exit 2, stage failures exit 1, matching the
/// codes clap uses for flag errors.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage { stage: &'static str, source: tweetforge::Error },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Stage { stage, source } => write!(f, "{stage}: {source}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Stage { .. } => 1,
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Attaches a stage name to core errors; config-shaped core errors are
/// reported as usage errors since they come from bad parameters.
pub(crate) trait StageResult<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError>;
}

impl<T> StageResult<T> for tweetforge::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError> {
        self.map_err(|e| match e {
            tweetforge::Error::Config(msg) => CliError::Usage(msg),
            source => CliError::Stage { stage: name, source },
        })
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => stages::run_ingest(&a),
        Command::Normalize(a) => stages::run_normalize(&a),
        Command::Tokenize(a) => stages::run_tokenize(&a),
        Command::BpeLearn(a) => stages::run_bpe_learn(&a),
        Command::BpeApply(a) => stages::run_bpe_apply(&a),
        Command::Pack(a) => stages::run_pack(&a),
        Command::Mask(a) => stages::run_mask(&a),
        Command::Eval(a) => stages::run_eval(&a),
        Command::Split(a) => stages::run_split(&a),
        Command::Aggregate(a) => stages::run_aggregate(&a),
        Command::Run(a) => config::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tweetforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
