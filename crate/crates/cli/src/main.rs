use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvtele_cli::{
    run, CliError, ConfigOverrides, Experiment, ExperimentConfig, EXIT_CONFIG, EXIT_TOLERANCE,
};

#[derive(Parser, Debug)]
#[command(
    name = "cvtele",
    version,
    about = "Continuous-variable teleportation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average fidelity and output photon number across gains.
    GainSweep(Args),
    /// Output intensity for a vacuum input across gains.
    VacuumIntensity(Args),
    /// Photon-number distribution of the averaged output.
    SinglePhoton(Args),
    /// Beam-splitter equivalence residuals over a randomized suite.
    Equivalence(Args),
    /// Measurement outcomes drawn from the outcome density.
    Sample(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// TOML file with any of the flag names as keys (underscored).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(long, short)]
    verbose: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

fn execute(experiment: Experiment, args: Args) -> Result<bool, CliError> {
    let file = match &args.config {
        Some(path) => ConfigOverrides::load(path)?,
        None => ConfigOverrides::default(),
    };
    let cfg = ExperimentConfig::resolve(experiment, file.overlay(args.overrides))?;
    log::info!("running {} with {:?}", experiment.name(), cfg);
    let report = run(&cfg)?;
    let text = report.table.render(cfg.format)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?
        }
    }
    for failure in &report.failures {
        eprintln!("tolerance failure: {failure}");
    }
    Ok(report.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (experiment, args) = match cli.command {
        Command::GainSweep(a) => (Experiment::GainSweep, a),
        Command::VacuumIntensity(a) => (Experiment::VacuumIntensity, a),
        Command::SinglePhoton(a) => (Experiment::SinglePhoton, a),
        Command::Equivalence(a) => (Experiment::Equivalence, a),
        Command::Sample(a) => (Experiment::Sample, a),
    };
    let level = if args.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();

    match execute(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
