use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmab::cli::{self, Outcome};
use dmab::config::{ExperimentConfig, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "dmab", version, about = "Dynamic multi-armed bandits driven by linear time-varying systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment; writes aggregate.csv and report.json.
    Simulate(Common),
    /// Evaluate the modelling assumptions; writes certificate.json.
    CheckAssumptions(Common),
    /// Check the sample-mean tail bounds empirically; writes tail.csv.
    VerifyTail(Common),
    /// Evaluate the regret bound; writes bound.csv and bound.json.
    Bound(Common),
    /// Run both park experiments; writes fig1.csv .. fig6.csv.
    ReproduceFigures(Figures),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replications: self.replications,
            horizon: self.horizon,
            out: self.out.clone(),
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Figures {
    /// Takes only the `run` block from this file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Flags,
}

fn load(common: &Common) -> dmab::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    config.apply(&common.flags.overrides());
    config.validate()?;
    Ok(config)
}

fn figures(args: &Figures) -> dmab::Result<Outcome> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let [park, _] = cli::park_figure_configs(&RunConfig {
                seed: 2024,
                ..RunConfig::default()
            });
            park
        }
    };
    config.apply(&args.flags.overrides());
    config.validate()?;
    let out = args.flags.out.clone().unwrap_or_else(|| "results/figures".into());
    cli::cmd_reproduce_figures(&config.run, &PathBuf::from(out))
}

fn run(command: &Command) -> dmab::Result<Outcome> {
    match command {
        Command::Simulate(c) => cli::cmd_simulate(&load(c)?),
        Command::CheckAssumptions(c) => cli::cmd_check_assumptions(&load(c)?),
        Command::VerifyTail(c) => cli::cmd_verify_tail(&load(c)?),
        Command::Bound(c) => cli::cmd_bound(&load(c)?),
        Command::ReproduceFigures(f) => figures(f),
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(&args.command) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if !outcome.passed {
                eprintln!("check failed");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
