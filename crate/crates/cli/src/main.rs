use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sae_cli::commands::{self, SplitPart};
use sae_cli::config::parse_size;
use sae_cli::{CliResult, ConfigArgs, RunConfig};

/// Stacked sparse autoencoder image classifier.
///
/// Metrics treat the class named `defective` as positive (class 0 if no
/// class has that name) and every other class as negative.
///
/// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
#[derive(Parser)]
#[command(name = "sae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, split, pretrain, fine-tune; write model, trace and report.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the confusion matrix and metrics of a saved model.
    Eval {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Which side of the configured split to evaluate.
        #[arg(long, value_enum, default_value = "all")]
        split: SplitPart,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Classify individual images.
    Predict {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write one PGM tile per hidden unit of an encoder layer.
    Visualize {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Encoder layer, 0 = closest to the input.
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Tile height and width; defaults to a square.
        #[arg(long, value_name = "HxW", value_parser = parse_size)]
        tile: Option<(usize, usize)>,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random configurations per component.
        #[arg(long, default_value_t = 20)]
        configs: usize,
    },
    /// Write the synthetic two-blob corpus as PGM class directories.
    Synth {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 16)]
        side: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Resolved config, or `None` after `--print-config` has printed it.
fn config_or_print(args: &ConfigArgs) -> CliResult<Option<RunConfig>> {
    let cfg = RunConfig::from_args(args)?;
    cfg.resolve()?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config } => {
            if let Some(cfg) = config_or_print(&config)? {
                let (_, text) = commands::train(&cfg)?;
                print!("{text}");
            }
        }
        Command::Eval {
            model,
            split,
            config,
        } => {
            if let Some(cfg) = config_or_print(&config)? {
                print!("{}", commands::eval(&cfg, &model, split)?.report());
            }
        }
        Command::Predict {
            model,
            images,
            config,
        } => {
            if let Some(cfg) = config_or_print(&config)? {
                print!("{}", commands::predict(&cfg, &model, &images)?);
            }
        }
        Command::Visualize {
            model,
            layer,
            out,
            tile,
        } => {
            let files = commands::visualize(&model, layer, &out, tile)?;
            println!("wrote {} tiles to {}", files.len(), out.display());
        }
        Command::Gradcheck { seed, configs } => {
            let (_, text) = commands::gradcheck(seed, configs)?;
            print!("{text}");
        }
        Command::Synth {
            out,
            samples_per_class,
            side,
            noise,
            seed,
        } => {
            let files = commands::synth(&out, samples_per_class, side, noise, seed)?;
            println!("wrote {} images to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
