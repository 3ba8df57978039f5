//! `trottersim`: deterministic Trotterisation sweeps with quantum-chaos
//! diagnostics. Exit codes: 0 success, 1 invalid config, 2 partial failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trottersim::runner::{
    figure_recipes, recipe_names, run_sweep, write_outputs, OutputFormat, SignatureKind,
    SweepConfig, TauGrid,
};
use trottersim::Error;

#[derive(Parser)]
#[command(name = "trottersim", version, about = "Trotterised quantum simulation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (cache lives under <out>/cache).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker thread count; defaults to TROTTERSIM_WORKERS or all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed override for random initial states.
    #[arg(long)]
    seed: Option<u64>,
    /// Table format: csv, json, or both.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Disable the on-disk result cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (model, size, tau) point and print the CSV table.
    Simulate {
        /// Model name (a2a_ising, heisenberg, dicke, kicked_top_{coe,cue,cse}).
        #[arg(long)]
        model: String,
        /// System size: spin j or chain length N.
        #[arg(long)]
        size: f64,
        /// Step size in 2 pi / g (kick strength for kicked tops).
        #[arg(long)]
        tau: f64,
        /// Comma-separated signatures (jz, photons, pr, entropy, pert_fid,
        /// sim_fid, infidelity, delta_avg, delta_point, chi2_rmt).
        #[arg(long, default_value = "jz", value_delimiter = ',')]
        signatures: Vec<String>,
        /// Comma-separated averaging windows in 2 pi / g.
        #[arg(long, default_value = "10", value_delimiter = ',')]
        windows: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a sweep described by a JSON config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run (or with --print, show) a bundled figure recipe.
    Recipe {
        name: String,
        /// Print the recipe's config as JSON instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the available figure recipes.
    Recipes,
}

fn parse_signatures(names: &[String]) -> Result<Vec<SignatureKind>, Error> {
    names
        .iter()
        .map(|n| {
            serde_json::from_value(serde_json::Value::String(n.clone()))
                .map_err(|_| Error::InvalidArgument(format!("unknown signature '{n}'")))
        })
        .collect()
}

fn configure_workers(requested: Option<usize>) -> Result<(), Error> {
    let from_env = std::env::var("TROTTERSIM_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = requested.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    }
    Ok(())
}

fn execute(mut config: SweepConfig, output: &OutputArgs) -> Result<ExitCode, Error> {
    configure_workers(output.workers)?;
    if let Some(seed) = output.seed {
        config.seed = seed;
    }
    let format: OutputFormat = output.format.parse()?;
    let cache_dir = output.out.join("cache");
    let cache = (!output.no_cache).then_some(cache_dir.as_path());
    let outcome = run_sweep(&config, cache)?;
    let files = write_outputs(&outcome, &config, &output.out, format)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    println!(
        "{} rows ({} cached), {} failures",
        outcome.rows.len(),
        outcome.cached_rows,
        outcome.failures.len()
    );
    if outcome.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &outcome.failures {
            eprintln!("failed: size {} tau {}: {}", f.size, f.tau, f.message);
        }
        Ok(ExitCode::from(2))
    }
}

fn run() -> Result<ExitCode, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            model,
            size,
            tau,
            signatures,
            windows,
            output,
        } => {
            let config = SweepConfig {
                model,
                sizes: vec![size],
                tau: TauGrid::linear(tau, tau, 1),
                signatures: parse_signatures(&signatures)?,
                windows,
                ..SweepConfig::default()
            };
            execute(config, &output)
        }
        Command::Sweep { config, output } => {
            let text = std::fs::read_to_string(&config)?;
            execute(SweepConfig::from_json(&text)?, &output)
        }
        Command::Recipe { name, print, output } => {
            let config = figure_recipes(&name)?;
            if print {
                println!("{}", serde_json::to_string_pretty(&config)?);
                Ok(ExitCode::SUCCESS)
            } else {
                execute(config, &output)
            }
        }
        Command::Recipes => {
            for name in recipe_names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e @ (Error::ConfigValidation(_) | Error::UnknownRecipe { .. })) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
