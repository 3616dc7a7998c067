use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaf_learn::dataset::BinFit;
use gaf_learn::experiment::{self, BaselineKind, ExperimentConfig, ExportFormat, Overrides};

#[derive(Parser)]
#[command(name = "gaf", about = "Learn sparse gradual argumentation classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    bin_fit: Option<BinFit>,
    /// Record wall-clock seconds in the summary (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Logistic,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve argumentation classifiers for every run of an experiment.
    Train(ExperimentArgs),
    /// Train a comparison classifier for every run of an experiment.
    Baseline {
        #[command(flatten)]
        args: ExperimentArgs,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Render or re-serialize a stored model.
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(long, default_value_t = 0.0)]
        prune_below: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the iterated strength values of a stored model for one instance.
    RunSemantics {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated input strengths, one per input argument.
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &ExperimentArgs) -> gaf_learn::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&args.config)?;
    Overrides {
        seed: args.seed,
        runs: args.runs,
        output_dir: args.out.clone(),
        lambda: args.lambda,
        bin_fit: args.bin_fit,
    }
    .apply(&mut config);
    Ok(config)
}

fn run(cli: Cli) -> gaf_learn::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let config = load(&args)?;
            let summary = experiment::cmd_train(&config, args.timing)?;
            println!(
                "{} runs: mean test accuracy {:.4}, mean connections {:.1} -> {}",
                summary.rows.len(),
                summary.mean_accuracy(),
                summary.mean_connections(),
                config.output_dir.display()
            );
        }
        Command::Baseline { args, kind, max_depth } => {
            let config = load(&args)?;
            let kind = match kind {
                Kind::Logistic => BaselineKind::Logistic,
                Kind::Tree => BaselineKind::Tree { max_depth },
            };
            let summary = experiment::cmd_baseline(&config, kind, args.timing)?;
            println!(
                "{}: mean test accuracy {:.4} over {} runs",
                kind.dir_name(),
                summary.mean_accuracy(),
                summary.rows.len()
            );
        }
        Command::Export {
            model,
            format,
            prune_below,
            out,
        } => {
            let format = match format {
                Format::Dot => ExportFormat::Dot,
                Format::Json => ExportFormat::Json,
            };
            experiment::cmd_export(&model, format, prune_below, &out)?;
        }
        Command::RunSemantics {
            model,
            instance,
            iterations,
            out,
        } => {
            let values = experiment::parse_instance(&instance)?;
            let csv = experiment::cmd_run_semantics(&model, &values, iterations, out.as_deref())?;
            if out.is_none() {
                print!("{csv}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("GAF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
