use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cxdisc_cli::{execute, CliError, Experiment, ExperimentConfig, Overrides};

/// Gauss discretization of bosonic baths and open-system dynamics
#[derive(Parser, Debug)]
#[command(name = "cxdisc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in a configuration file
    Run {
        /// Configuration file
        #[arg(value_name = "CONFIG")]
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Real Gauss rule of x^s e^-x (index, node, weight)
    QuadDump(Common),
    /// Unit-weight contour rule
    CquadDump(Common),
    /// Discrete bath energies and couplings
    BathDump(Common),
    /// Dephasing exponent of the discrete bath against the continuum
    Dephasing(Common),
    /// Survival probability of a lattice eigenstate in the discrete bath
    GaahSurvival(Common),
    /// Long-time survival probability with its running average
    GaahLongtime(Common),
    /// Averaged survival probability over a potential-strength sweep
    AspDiagram(Common),
    /// Volterra reference dynamics
    Oracle(Common),
    /// Reference dynamics against the discrete bath
    Compare(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

fn build(cli: Cli) -> Result<(ExperimentConfig, Option<usize>), CliError> {
    let (experiment, file, common) = match cli.command {
        Command::Run { file, common } => (None, Some(file), common),
        Command::QuadDump(c) => (Some(Experiment::QuadDump), None, c),
        Command::CquadDump(c) => (Some(Experiment::CquadDump), None, c),
        Command::BathDump(c) => (Some(Experiment::BathDump), None, c),
        Command::Dephasing(c) => (Some(Experiment::Dephasing), None, c),
        Command::GaahSurvival(c) => (Some(Experiment::GaahSurvival), None, c),
        Command::GaahLongtime(c) => (Some(Experiment::GaahLongtime), None, c),
        Command::AspDiagram(c) => (Some(Experiment::AspDiagram), None, c),
        Command::Oracle(c) => (Some(Experiment::Oracle), None, c),
        Command::Compare(c) => (Some(Experiment::Compare), None, c),
    };
    let file = file.or(common.config);
    let mut cfg = match (&file, experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(e)) => ExperimentConfig::new(e),
        (None, None) => unreachable!("run always carries a file"),
    };
    if let Some(e) = experiment {
        if cfg.experiment != e {
            return Err(CliError::Config(format!(
                "experiment: file declares {} but the subcommand is {}",
                cfg.experiment.as_str(),
                e.as_str()
            )));
        }
    }
    cfg.apply(&common.overrides);
    Ok((cfg, common.threads))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli).and_then(|(cfg, threads)| {
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Config("threads: must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("threads: {e}")))?;
        }
        execute(&cfg)
    });
    match result {
        Ok(report) => {
            eprintln!(
                "wrote {} rows to {} (manifest {})",
                report.rows,
                report.output.display(),
                report.manifest.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
