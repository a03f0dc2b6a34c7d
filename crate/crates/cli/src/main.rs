use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use numsqueeze_cli::config::{preset, Axis, RunConfig, PRESETS};
use numsqueeze_cli::error::{CliError, CliResult};
use numsqueeze_cli::runner::{self, with_threads};
use numsqueeze_cli::verify::{run_suites, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "numsqueeze", version, about = "Number squeezing through Kerr-sheared Ramsey sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration over its sweep.
    Run(RunArgs),
    /// Run a configuration with the sweep axes replaced.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Hold-time axis as start:stop:count, in the config's hold units.
        #[arg(long = "t-hold")]
        t_hold: Option<Axis>,
        /// Phase axis as start:stop:count[:open].
        #[arg(long)]
        phi: Option<Axis>,
    },
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
    /// List the built-in presets, or print one as JSON.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> CliResult<Option<RunConfig>> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                RunConfig::from_json(&text).map(Some)
            }
            (None, Some(name)) => preset(name).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed of the TW trajectories.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Trajectories per hold time (TW).
    #[arg(long = "n-traj")]
    n_traj: Option<u64>,
    /// Suppress the progress lines.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn config(&self) -> CliResult<RunConfig> {
        let mut c = self
            .source
            .load()?
            .ok_or_else(|| CliError::config("one of --config or --preset is required"))?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(n) = self.n_traj {
            c.n_traj = n;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// TW configuration for the frozen-mode suite (default: preset fig3a).
    #[command(flatten)]
    source: Source,
    /// Suites to run: fock, ordering, frozen-mode (default: all).
    #[arg(long = "suite", value_parser = parse_suite)]
    suites: Vec<Suite>,
    /// Seed for every suite (default: each suite's own).
    #[arg(long)]
    seed: Option<u64>,
    /// Random draws per atom number in the Fock suite.
    #[arg(long, default_value_t = 50)]
    draws: usize,
    /// Relative perturbation of chi22 in the closed form of the Fock suite.
    #[arg(long = "perturb-chi", default_value_t = 0.0)]
    perturb_chi: f64,
    /// Trajectories for the frozen-mode suite.
    #[arg(long = "n-traj")]
    n_traj: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress the progress lines.
    #[arg(long)]
    quiet: bool,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::ALL
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| format!("unknown suite `{s}` (fock, ordering, frozen-mode)"))
}

fn run(args: &RunArgs, config: RunConfig) -> CliResult<()> {
    let out = with_threads(args.threads, || runner::run(&config, &args.out, !args.quiet))??;
    if !args.quiet {
        eprintln!("wrote {} rows to {}", out.rows.len(), args.out.join("results.csv").display());
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let mut opts = VerifyOptions::default();
    if !args.suites.is_empty() {
        opts.suites = args.suites.clone();
    }
    opts.oracle.draws = args.draws;
    opts.oracle.chi_perturbation = args.perturb_chi;
    if let Some(c) = args.source.load()? {
        opts.frozen = c;
    }
    if let Some(seed) = args.seed {
        opts.oracle.seed = seed;
        opts.ordering.seed = seed;
        opts.frozen.seed = seed;
    }
    if let Some(n) = args.n_traj {
        opts.frozen.n_traj = n;
    }
    opts.progress = !args.quiet;
    let reports = with_threads(args.threads, || run_suites(&opts, |r| println!("{r}")))??;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed suites: {}", failed.join(", "))))
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            run(&args, config)
        }
        Command::Sweep { run: args, t_hold, phi } => {
            let mut config = args.config()?;
            if let Some(a) = t_hold {
                config.sweep.t_hold = a;
            }
            if let Some(a) = phi {
                config.sweep.phi = a;
            }
            run(&args, config)
        }
        Command::Verify(args) => verify(&args),
        Command::Presets { name: None } => {
            for p in PRESETS {
                println!("{:<16} {}", p.name, p.summary);
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            println!("{}", preset(&name)?.resolved()?.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
