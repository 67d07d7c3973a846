// SPDX-License-Identifier: Apache-2.0

//! `multiview`: build an index, train a scorer, retrieve, evaluate.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "multiview", version, about = "Multiview generative passage retrieval")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the FM-index over a corpus (pseudo-queries attached first).
    BuildIndex(BuildIndexArgs),
    /// Train the n-gram scorer from query/passage pairs.
    TrainScorer(TrainScorerArgs),
    /// Retrieve passages for queries and write a run file.
    Retrieve(RetrieveArgs),
    /// Score a run file against qrels.
    Evaluate(EvaluateArgs),
    /// Retrieve and evaluate at several beam sizes.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct BuildIndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `jsonl` or `tsv`; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<String>,
    /// Generated queries per passage lacking them [default: 5].
    #[arg(long)]
    pub pseudo_queries: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Index path to write (falls back to --index).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct TrainScorerArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// `query \t passage_id` training pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Samples per pair as title:substring:pseudo-query [default: 3:10:5].
    #[arg(long)]
    pub ratio: Option<String>,
    /// Unsupervised samples per passage with pseudo-queries [default: 0].
    #[arg(long)]
    pub unsupervised: Option<usize>,
    /// n-gram order [default: 3].
    #[arg(long)]
    pub order: Option<usize>,
    /// Additive smoothing [default: 0.1].
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Character 3-gram overlap a substring target must exceed [default: 0.2].
    #[arg(long)]
    pub overlap_threshold: Option<f64>,
    #[arg(long)]
    pub min_substring_len: Option<usize>,
    #[arg(long)]
    pub max_substring_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scorer path to write (falls back to --scorer).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DecodeArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    /// [default: 15]
    #[arg(long)]
    pub beam_size: Option<usize>,
    /// Comma-separated subset of title,substring,pseudo-query [default: all].
    #[arg(long)]
    pub views: Option<String>,
    /// Per-token bonus on pseudo-query scores [default: 0].
    #[arg(long)]
    pub query_length_bias: Option<f64>,
    /// Candidates expanded per hypothesis, as a multiple of the beam [default: 2].
    #[arg(long)]
    pub candidate_factor: Option<usize>,
    /// Passages kept per query [default: 100].
    #[arg(long)]
    pub top_k: Option<usize>,
    /// `exp` (length-normalized) or `raw` [default: exp].
    #[arg(long)]
    pub transform: Option<String>,
    /// [default: 1]
    #[arg(long)]
    pub length_exponent: Option<f64>,
    /// Weights for title,substring,pseudo-query [default: 1,1,1].
    #[arg(long)]
    pub view_weights: Option<String>,
    /// Accepted for uniformity; decoding is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threads [default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub decode: DecodeArgs,
    /// `query_id \t text` file.
    #[arg(long, conflicts_with = "query")]
    pub queries: Option<PathBuf>,
    /// A single query, written under id `q`.
    #[arg(long)]
    pub query: Option<String>,
    /// Run file to write; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// e.g. hits@5,recall@20,mrr@10 [default: hits@5,20,100 recall@5,20,100 mrr@10].
    #[arg(long)]
    pub metrics: Option<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// [default: 5,10,15,20]
    #[arg(long)]
    pub beam_sizes: Option<String>,
    #[arg(long)]
    pub metrics: Option<String>,
    /// JSON file with one report per beam size.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::BuildIndex(a) => commands::build_index(a, &config),
        Command::TrainScorer(a) => commands::train_scorer(a, &config),
        Command::Retrieve(a) => commands::retrieve(a, &config),
        Command::Evaluate(a) => commands::evaluate(a, &config),
        Command::Sweep(a) => commands::sweep(a, &config),
    }
}

fn fail(code: &str, message: &str, exit: u8) -> ExitCode {
    let line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{code}]: {line}");
    ExitCode::from(exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return fail("USAGE", first, 2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code(), &e.to_string(), e.exit_code() as u8),
    }
}
