use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chernoff_heat::chernoff::Variant;
use chernoff_heat::config::{ConfigError, Experiment, ExperimentConfig};
use chernoff_heat::experiment::{cmd_converge, cmd_run, RunError};
use chernoff_heat::selftest::{format_report, run_selftest, SelftestOptions};

#[derive(Debug, Parser)]
#[command(name = "chernoff-heat", version, about = "Chernoff-product heat semigroup experiments")]
struct Cli {
    /// Worker threads for the numeric kernels.
    #[arg(long, global = true, env = "CHERNOFF_HEAT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the initial data once per configured n and write field snapshots.
    Run(RunArgs),
    /// Run a convergence study and write convergence.csv.
    Converge(RunArgs),
    /// Run the invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme variant; overrides `scheme.variant` from the config.
    #[arg(long)]
    variant: Option<Variant>,
    /// Seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn load(args: &RunArgs) -> Result<(Experiment, PathBuf), ConfigError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(v) = args.variant {
        cfg = cfg.with_variant(v);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let exp = cfg.validate()?;
    let out = args.out.clone().unwrap_or_else(|| exp.output_dir.clone());
    Ok((exp, out))
}

fn report(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run(args) => match load(&args).map_err(RunError::from).and_then(|(exp, dir)| cmd_run(&exp, &dir, &mut out)) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => report(e),
        },
        Command::Converge(args) => {
            match load(&args).map_err(RunError::from).and_then(|(exp, dir)| cmd_converge(&exp, &dir, &mut out)) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => report(e),
            }
        }
        Command::Selftest(args) => {
            let results = run_selftest(SelftestOptions { seed: args.seed, inject_fault: args.inject_fault });
            let _ = out.write_all(format_report(&results).as_bytes());
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
