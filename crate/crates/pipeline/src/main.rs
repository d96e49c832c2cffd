use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grasp_pipeline::config::{self, Overrides};
use grasp_pipeline::farthest::cmd_farthest;
use grasp_pipeline::run::{cmd_evaluate, cmd_reference, RunOptions};
use grasp_pipeline::util::write_json_atomic;
use grasp_pipeline::{PipelineError, Result};

/// Grasp-sampler benchmark: reference grids, sampler evaluation, diverse grasp selection.
///
/// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 budget exceeded.
#[derive(Parser)]
#[command(name = "graspbench", version)]
struct Cli {
    /// Log at debug level.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the SE(3) grid per object, label it, and write reference files.
    Reference(RunArgs),
    /// Run every sampler on every object and seed; write report CSVs.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Reference directory (default `<out>/reference`).
        #[arg(long)]
        reference_dir: Option<PathBuf>,
    },
    /// Pick k mutually distant grasps from a reference's robust set.
    Farthest {
        /// Reference binary written by `reference`.
        #[arg(long)]
        reference: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Position of the first grasp within the robust set.
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
        /// JSON output file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, then print its hash.
    ValidateConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Replace the eps list, e.g. `--eps 0.05,0.109`.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Replace the gamma list.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Keep finished objects and cells from an earlier run of the same config.
    #[arg(long)]
    resume: bool,
}

impl RunArgs {
    fn load(&self) -> Result<config::LoadedConfig> {
        let overrides =
            Overrides { out_dir: self.out.clone(), seed: self.seed_override, eps: self.eps.clone(), gamma: self.gamma.clone() };
        config::load(&self.config, &overrides)
    }

    fn options(&self, reference_dir: Option<PathBuf>) -> Result<RunOptions> {
        if self.jobs == Some(0) {
            return Err(PipelineError::Validation("--jobs must be at least 1".into()));
        }
        Ok(RunOptions { jobs: self.jobs, resume: self.resume, reference_dir })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Reference(args) => {
            let loaded = args.load()?;
            let stage = cmd_reference(&loaded, &args.options(None)?)?;
            for (id, o) in &stage.objects {
                println!("{id}: {} enumerated, {} valid, {} successful", o.counts.enumerated, o.counts.valid, o.counts.success);
            }
        }
        Command::Evaluate { run, reference_dir } => {
            let loaded = run.load()?;
            let stage = cmd_evaluate(&loaded, &run.options(reference_dir)?)?;
            println!(
                "{} cells ({} resumed, {} hit the attempt cap), reports in {}",
                stage.cells,
                stage.cells_resumed,
                stage.cells_exhausted,
                loaded.config.out_dir.display()
            );
        }
        Command::Farthest { reference, k, gamma, seed_index, out } => {
            let result = cmd_farthest(&reference, k, gamma, seed_index)?;
            match out {
                Some(path) => write_json_atomic(&path, &result)?,
                None => println!("{}", serde_json::to_string_pretty(&result).expect("serialisable")),
            }
        }
        Command::ValidateConfig(args) => {
            let loaded = args.load()?;
            println!("config ok, hash {}", loaded.config.hash());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
