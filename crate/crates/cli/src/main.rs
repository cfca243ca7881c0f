use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cr_orient::cr_operator::Discretization;
use cr_orient_cli::commands::{self, OrientMode, Output};
use cr_orient_cli::suite::{parse_resolution, SuiteConfig, SuiteName};
use cr_orient_cli::CliError;

/// Conley-Zehnder indices, Cauchy-Riemann kernels, orientation signs, spin
/// lifts and twisted complexes.
#[derive(Parser, Debug)]
#[command(name = "cr-orient", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suite configuration document (`suite_config`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all random test data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Discretization `K,L,Ns`.
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<Discretization>,
    /// Record wall-clock times in suite reports (makes them non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conley-Zehnder index of the path generated by a symmetric loop.
    Cz { input: PathBuf },
    /// Numerical kernel of the operator of a field.
    Kernel { input: PathBuf },
    /// Fredholm index estimate, compared with the CZ indices.
    Index { input: PathBuf },
    /// Orientation transport and conjugation sign of a unitary gauge.
    Orient {
        #[arg(value_enum)]
        mode: OrientMode,
        input: PathBuf,
        /// Number of steps of the parameter grid.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Winding, spin lift and delta sign of a loop in SO(n).
    Spin { input: PathBuf },
    /// Boundaries and homologies of a complex datum.
    Complex { input: PathBuf },
    /// Run a verification suite.
    Suite {
        #[arg(value_enum, default_value = "all")]
        name: SuiteName,
    },
    /// Check an input document without computing anything.
    Validate { input: PathBuf },
}

fn resolution(cli: &Cli, default: Discretization) -> Result<Discretization, CliError> {
    let d = cli.resolution.unwrap_or(default);
    d.validate().map_err(|e| CliError::Config(format!("--resolution: {e}")))?;
    Ok(d)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let defaults = SuiteConfig::default();
    match &cli.command {
        Command::Cz { input } => commands::cz(input),
        Command::Kernel { input } => commands::kernel(input, resolution(cli, defaults.reference)?),
        Command::Index { input } => commands::index(input, resolution(cli, defaults.reference)?),
        Command::Orient { mode, input, steps } => {
            commands::orient(input, *mode, resolution(cli, defaults.transport)?, *steps)
        }
        Command::Spin { input } => commands::spin(input),
        Command::Complex { input } => commands::complex(input),
        Command::Suite { name } => commands::suite(*name, cli.config.as_deref(), cli.resolution, cli.seed, cli.timings),
        Command::Validate { input } => commands::validate(input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        if let Some(path) = &cli.json {
            let mut text = serde_json::to_string_pretty(&out.json).expect("output serializes");
            text.push('\n');
            std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
