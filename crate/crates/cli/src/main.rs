//! `streameval` command line: evaluate score-map datasets, generate
//! synthetic fixtures, and cross-check the streaming engine against the
//! exact oracles.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use streameval_core::{render, Connectivity, ReportFormat};
use streameval_cli::runner::{run_eval, EvalMode, ImageScoreMode, RangeSpec, RunConfig};
use streameval_cli::synth::{generate, SynthProfile, SynthSpec};
use streameval_cli::HarnessError;

#[derive(Parser)]
#[command(name = "streameval", version, about = "Streaming anomaly-detection evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a dataset and emit a per-category metric table.
    Eval(EvalArgs),
    /// Generate a synthetic dataset tree.
    Gen(GenArgs),
    /// Run streaming and exact evaluation, failing on any disagreement
    /// beyond 2/bins (shorthand for `eval --mode differential`).
    Diff(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Streaming,
    Exact,
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ImageScoreArg {
    Max,
    Mean,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset root directory.
    #[arg(long)]
    root: PathBuf,

    /// Comma-separated category filter (default: every subdirectory).
    #[arg(long, value_delimiter = ',')]
    categories: Vec<String>,

    /// Histogram bins per accumulator.
    #[arg(long, default_value_t = 1024)]
    bins: usize,

    /// Score range as `lo,hi`, or `auto` for a two-pass min/max scan.
    #[arg(long, default_value = "0,1")]
    range: String,

    /// FPR integration limit for AU-PRO.
    #[arg(long, default_value_t = 0.3)]
    fpr_limit: f64,

    /// Mask connectivity: 4 or 8.
    #[arg(long, default_value_t = 8)]
    connectivity: u8,

    /// Evaluation path.
    #[arg(long, value_enum, default_value_t = ModeArg::Streaming)]
    mode: ModeArg,

    /// Parallel ingestion workers.
    #[arg(long, env = "STREAMEVAL_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Image-level score: max/mean pixel pooling or the
    /// image_scores.csv sidecar.
    #[arg(long, value_enum, default_value_t = ImageScoreArg::Max)]
    image_score: ImageScoreArg,

    /// Report syntax.
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for the dataset tree.
    #[arg(long)]
    root: PathBuf,

    /// RNG seed; identical seeds write byte-identical trees.
    #[arg(long)]
    seed: u64,

    #[arg(long, default_value_t = 3)]
    categories: usize,

    /// Images per category.
    #[arg(long, default_value_t = 64)]
    images: usize,

    #[arg(long, default_value_t = 64)]
    height: usize,

    #[arg(long, default_value_t = 64)]
    width: usize,

    /// 0.0 = uninformative scores, 1.0 = perfect predictions.
    #[arg(long, default_value_t = 0.7)]
    separation: f64,

    /// Fraction of images given an anomaly mask.
    #[arg(long, default_value_t = 0.5)]
    anomalous_frac: f64,

    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
}

fn parse_range(raw: &str) -> Result<RangeSpec, HarnessError> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(RangeSpec::Auto);
    }
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() == 2 {
        if let (Ok(lo), Ok(hi)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            return Ok(RangeSpec::Fixed(lo, hi));
        }
    }
    Err(HarnessError::Usage(format!(
        "--range expects `lo,hi` or `auto`, got {raw:?}"
    )))
}

fn build_config(args: &EvalArgs, mode: EvalMode) -> Result<RunConfig, HarnessError> {
    let connectivity = match args.connectivity {
        4 => Connectivity::Four,
        8 => Connectivity::Eight,
        other => {
            return Err(HarnessError::Usage(format!(
                "--connectivity must be 4 or 8, got {other}"
            )))
        }
    };
    let config = RunConfig {
        root: args.root.clone(),
        categories: if args.categories.is_empty() {
            None
        } else {
            Some(args.categories.clone())
        },
        bins: args.bins,
        range: parse_range(&args.range)?,
        fpr_limit: args.fpr_limit,
        connectivity,
        mode,
        workers: args.workers,
        image_score: match args.image_score {
            ImageScoreArg::Max => ImageScoreMode::MaxPixel,
            ImageScoreArg::Mean => ImageScoreMode::MeanPixel,
            ImageScoreArg::Csv => ImageScoreMode::Csv,
        },
    };
    config.validate()?;
    Ok(config)
}

fn run_eval_command(args: &EvalArgs, mode: EvalMode) -> Result<i32, HarnessError> {
    let config = build_config(args, mode)?;
    let outcome = run_eval(&config)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for failure in &outcome.failures {
        eprintln!("error: category {}: {}", failure.category, failure.message);
    }
    if let Some(report) = &outcome.report {
        let format = match args.format {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Json => ReportFormat::Json,
        };
        let text = render(report, format);
        match &args.out {
            Some(path) => {
                std::fs::write(path, &text).map_err(|e| HarnessError::io(path, e))?
            }
            None => print!("{text}"),
        }
    }
    Ok(if outcome.is_clean() { 0 } else { 1 })
}

fn run_gen_command(args: &GenArgs) -> Result<i32, HarnessError> {
    let spec = SynthSpec {
        seed: args.seed,
        n_categories: args.categories,
        n_images: args.images,
        height: args.height,
        width: args.width,
        profile: SynthProfile {
            separation: args.separation,
            anomalous_frac: args.anomalous_frac,
        },
    };
    if !(0.0..=1.0).contains(&spec.profile.separation) {
        return Err(HarnessError::Usage(format!(
            "--separation must lie in [0, 1], got {}",
            spec.profile.separation
        )));
    }
    if !(0.0..=1.0).contains(&spec.profile.anomalous_frac) {
        return Err(HarnessError::Usage(format!(
            "--anomalous-frac must lie in [0, 1], got {}",
            spec.profile.anomalous_frac
        )));
    }
    generate(&args.root, &spec, args.force)?;
    eprintln!(
        "wrote {} categories x {} images ({}x{}) under {}",
        spec.n_categories,
        spec.n_images,
        spec.height,
        spec.width,
        args.root.display()
    );
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(args) => {
            let mode = match args.mode {
                ModeArg::Streaming => EvalMode::Streaming,
                ModeArg::Exact => EvalMode::Exact,
                ModeArg::Differential => EvalMode::Differential,
            };
            run_eval_command(args, mode)
        }
        Command::Diff(args) => run_eval_command(args, EvalMode::Differential),
        Command::Gen(args) => run_gen_command(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
