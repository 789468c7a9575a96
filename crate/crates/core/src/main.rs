use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use resobus::cli::{
    check_thresholds, parse_truncation, print_schedule, run, CliError, ExperimentConfig, ExperimentKind, Overrides,
};

#[derive(Parser)]
#[command(
    name = "resobus",
    version,
    about = "Resonator state transfer and controlled-phase gate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its artifacts.
    Run(Common),
    /// Print the control schedule of the configured experiment.
    Schedule(Common),
    /// Cross-check the integrator against the interaction picture and closed forms.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: PathBuf,
    /// Worker threads for grid and sweep points.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Fock truncation `d1,dR,d2`.
    #[arg(long, value_parser = parse_truncation)]
    truncation: Option<[usize; 3]>,
    /// Angles per axis of the average-gate grid.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Exit with status 4 if a reference threshold is missed.
    #[arg(long = "assert")]
    assert_thresholds: bool,
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides {
        threads: c.threads,
        out_dir: c.out_dir.clone(),
        truncation: c.truncation,
        grid_n: c.grid_n,
    });
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (c, validate) = match cli.command {
        Command::Schedule(c) => {
            print!("{}", print_schedule(&load(&c)?)?);
            return Ok(());
        }
        Command::Run(c) => (c, false),
        Command::Validate(c) => (c, true),
    };
    let mut cfg = load(&c)?;
    if validate {
        cfg.experiment.kind = ExperimentKind::Validate;
    }
    let summary = run(&cfg)?;
    println!("{}", summary.message);
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if c.assert_thresholds {
        check_thresholds(&cfg, &summary)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
