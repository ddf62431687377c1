use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use warnrank::eval::Grouping;
use warnrank::harness::{self, ExperimentConfig, HarnessError, CACHE_DIR_ENV, EXIT_USER};
use warnrank::slicer::ContextMode;

/// Rank static-analysis warnings by how likely they are true positives,
/// using program-slice contexts and a two-branch BiLSTM classifier.
#[derive(Debug, Parser)]
#[command(name = "warnrank", version, after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

const AFTER_HELP: &str = "Prepared-warning caches go to $WARNRANK_CACHE_DIR, or <output-dir>/cache when unset.\n\
Exit status: 0 on success, 1 on internal errors, 2 on bad input or configuration.";

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; keys not given keep their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for every output file [default: warnrank-out]
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Root seed for splits, embeddings, initialisation and shuffling [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Corpus directory with manifest.json; the synthetic corpus is used when omitted
    #[arg(long, global = true)]
    corpus_dir: Option<PathBuf>,
    /// Warning list (JSON lines) [default: <corpus-dir>/warnings.jsonl]
    #[arg(long, global = true)]
    warnings: Option<PathBuf>,
    /// Context extraction: raw_function, control_only, data_only, control_and_data [default: control_and_data]
    #[arg(long, global = true)]
    mode: Option<ContextMode>,
    /// Keep identifiers and literals verbatim
    #[arg(long, global = true)]
    no_abstraction: bool,
    /// Drop the reported-statement branch from the model
    #[arg(long, global = true)]
    no_stmt_branch: bool,
    /// Training epochs [default: 60]
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Cross-validation folds [default: 5]
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Fold grouping: combined, per_project, cross_project [default: combined]
    #[arg(long, global = true)]
    grouping: Option<Grouping>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the context extracted for a source location
    Slice {
        /// Corpus-relative file path
        #[arg(long)]
        file: String,
        #[arg(long)]
        line: u32,
    },
    /// Write the synthetic corpus and its labeled warnings to <output-dir>/corpus
    Synth,
    /// Extract and tokenize every warning's context into the cache
    Prepare {
        /// Also report the vocabulary size with abstraction toggled
        #[arg(long)]
        compare_abstraction: bool,
    },
    /// Fit the token embedding on all warning contexts
    TrainEmbed,
    /// Fit embedding and ranker on all labeled warnings
    Train,
    /// Score warnings with a trained model and write ranked.json
    Rank {
        /// Directory written by `train` [default: <output-dir>]
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Cross-validated precision and recall at the top k% of the ranking
    Eval,
    /// Evaluate every mode x statement-branch x abstraction combination
    Ablate,
}

fn build_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &common.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = &common.corpus_dir {
        cfg.corpus.dir = Some(v.clone());
    }
    if let Some(v) = &common.warnings {
        cfg.corpus.warnings = Some(v.clone());
    }
    if let Some(v) = common.mode {
        cfg.context.mode = v;
    }
    if common.no_abstraction {
        cfg.preprocess.abstraction_on = false;
    }
    if common.no_stmt_branch {
        cfg.model.use_stmt_branch = false;
    }
    if let Some(v) = common.epochs {
        cfg.training.epochs = v;
    }
    if let Some(v) = common.folds {
        cfg.split.folds = v;
    }
    if let Some(v) = common.grouping {
        cfg.split.grouping = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, HarnessError> {
    let cfg = build_config(&cli.common)?;
    log::debug!("cache dir {} (from ${CACHE_DIR_ENV} if set)", harness::cache_dir(&cfg).display());
    match cli.command {
        Command::Slice { file, line } => harness::cmd_slice(&cfg, &file, line, cfg.context.mode),
        Command::Synth => harness::cmd_synth(&cfg),
        Command::Prepare { compare_abstraction } => harness::cmd_prepare(&cfg, compare_abstraction).map(|(text, _)| text),
        Command::TrainEmbed => harness::cmd_train_embed(&cfg),
        Command::Train => harness::cmd_train(&cfg),
        Command::Rank { model_dir } => harness::cmd_rank(&cfg, model_dir.as_deref()),
        Command::Eval => harness::cmd_eval(&cfg),
        Command::Ablate => harness::cmd_ablate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
