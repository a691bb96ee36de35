//! `ontorel` command line: every pipeline stage reads and writes
//! self-describing artifact files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Context, PipelineConfig};

#[derive(Parser)]
#[command(name = "ontorel", version, about = "Ontology relevance classification pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized stage; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Embedding backend: hashing[:<dim>], store:<path> or remote:[<url>][#<dim>].
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// OWL files to annotation records.
    ExtractOwl {
        /// ONTOLOGY=PATH pairs.
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Tag-set file mapping ontology ids to annotation tags.
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long)]
        min_length: Option<usize>,
    },
    /// Plain-text documents to filtered paragraphs.
    IngestText {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        min_length: Option<usize>,
        #[arg(long)]
        keep_headings: bool,
    },
    /// Annotation or paragraph records to a vector store.
    Embed { input: PathBuf },
    /// Labeled vectors to train/test sets and disjoint test partitions.
    Split {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        partitions: Option<usize>,
        /// Per-class cap on the training side: a count, min-class or none.
        #[arg(long)]
        undersample: Option<String>,
    },
    /// Grid search with stratified cross-validation.
    Tune {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        /// Classifier kind, comma-separated kinds or all.
        #[arg(long, default_value = "all")]
        classifier: String,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        /// accuracy or macro_f1.
        #[arg(long)]
        scoring: Option<String>,
    },
    /// Fits models from tuned or default parameters.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        /// Cross-validation artifact from `tune`.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        classifier: Option<String>,
    },
    /// Scores models on test partitions.
    Evaluate {
        #[arg(long, required = true, num_args = 1..)]
        models: Vec<PathBuf>,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        partitions: Vec<PathBuf>,
    },
    /// Friedman test and pairwise win matrix over partition scores.
    Compare {
        metrics: PathBuf,
        /// accuracy, macro_precision, macro_recall or macro_f1.
        #[arg(long, default_value = "accuracy")]
        measure: String,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Classifies paragraphs with every model.
    Predict {
        #[arg(long, required = true, num_args = 1..)]
        models: Vec<PathBuf>,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        paragraphs: PathBuf,
    },
    /// Per-ontology counts, confidence sums and margin sums.
    Report {
        predictions: PathBuf,
        /// predicted-only or all-paragraphs.
        #[arg(long, default_value = "predicted-only")]
        basis: String,
        /// Directory for bar-chart CSV files.
        #[arg(long)]
        charts: Option<PathBuf>,
    },
    /// Re-checks artifact and input digests.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> ontorel::Result<()> {
    let config = match &cli.global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context {
        config,
        seed: cli.global.seed,
        backend: cli.global.backend,
        dim: cli.global.dim,
        out: cli.global.out,
    };
    match cli.command {
        Command::ExtractOwl {
            inputs,
            tags,
            min_length,
        } => commands::extract_owl(&ctx, &inputs, tags.as_deref(), min_length),
        Command::IngestText {
            inputs,
            min_length,
            keep_headings,
        } => commands::ingest_text(&ctx, &inputs, min_length, keep_headings),
        Command::Embed { input } => commands::embed(&ctx, &input),
        Command::Split {
            annotations,
            vectors,
            train_fraction,
            partitions,
            undersample,
        } => commands::split(&ctx, &annotations, &vectors, train_fraction, partitions, undersample.as_deref()),
        Command::Tune {
            data,
            vectors,
            classifier,
            grid,
            folds,
            scoring,
        } => commands::tune(&ctx, &data, &vectors, &classifier, grid.as_deref(), folds, scoring.as_deref()),
        Command::Train {
            data,
            vectors,
            params,
            classifier,
        } => commands::train(&ctx, &data, &vectors, params.as_deref(), classifier.as_deref()),
        Command::Evaluate {
            models,
            vectors,
            partitions,
        } => commands::evaluate_cmd(&ctx, &models, &vectors, &partitions),
        Command::Compare { metrics, measure, alpha } => commands::compare_cmd(&ctx, &metrics, &measure, alpha),
        Command::Predict {
            models,
            vectors,
            paragraphs,
        } => commands::predict(&ctx, &models, &vectors, &paragraphs),
        Command::Report {
            predictions,
            basis,
            charts,
        } => commands::report(&ctx, &predictions, &basis, charts.as_deref()),
        Command::Verify { paths } => commands::verify(&paths),
    }
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
