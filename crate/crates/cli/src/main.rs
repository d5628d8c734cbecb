//! `qnm`: quasinormal modes and their perturbative corrections from a run file.
//!
//! Exit codes: 0 success, 2 bad input, 3 solver failure, 4 precision exhausted.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod runfile;

use clap::{Parser, Subcommand};
use commands::Overrides;
use output::Sinks;
use qnm_lpt::LptError;
use runfile::{RunFile, SweepKind};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("run file: {0}")]
    Parse(String),
    #[error("{0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Lpt(#[from] LptError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Lpt(e) => match e {
                LptError::PrecisionExhausted { .. } => 4,
                LptError::InvalidArgument(_)
                | LptError::RegimeViolation(_)
                | LptError::UnsupportedConfiguration(_)
                | LptError::BadAngle { .. }
                | LptError::GammaPole(_) => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "qnm", version, about = "Quasinormal modes and logarithmic perturbation theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run file (TOML).
    #[arg(long)]
    runfile: Option<PathBuf>,
    /// CSV output path; the JSON sidecar goes next to it. Default: stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shooting and integration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Force asymptotic subtraction on or off (default: automatic).
    #[arg(long, action = clap::ArgAction::Set)]
    subtract_asymptotics: Option<bool>,
    /// Chain eigenvalue seeds along sweep paths.
    #[arg(long, action = clap::ArgAction::Set)]
    seed_from_exact: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Unperturbed eigenvalues.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Shifts ω₁ … ωₙ for the run file's perturbation.
    Perturb {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Bump-position or strength sweep on the step.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides sweep.kind.
        #[arg(long, value_enum)]
        kind: Option<SweepKind>,
    },
    /// Pöschl–Teller width perturbation computed three ways.
    Demo {
        #[command(flatten)]
        common: Common,
    },
}

const DEMO_DEFAULT: &str = "[potential]\nkind = \"poschl_teller\"\nv0 = 5.0\n";

fn load(common: &Common, fallback: Option<&str>) -> Result<(RunFile, Sinks), CliError> {
    let mut rf = match (&common.runfile, fallback) {
        (Some(p), _) => RunFile::load(p)?,
        (None, Some(text)) => RunFile::parse(text)?,
        (None, None) => return Err(CliError::Input("--runfile is required".into())),
    };
    Overrides { tol: common.tol, subtract: common.subtract_asymptotics, seed_from_exact: common.seed_from_exact }
        .apply(&mut rf)?;
    let sinks = Sinks::new(common.out.clone(), rf.output.csv.clone(), rf.output.json.clone());
    Ok((rf, sinks))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common } => {
            let (rf, s) = load(&common, None)?;
            commands::cmd_solve(&rf, &s)
        }
        Command::Perturb { common, order } => {
            let (rf, s) = load(&common, None)?;
            commands::cmd_perturb(&rf, order, &s)
        }
        Command::Sweep { common, kind } => {
            let (rf, s) = load(&common, None)?;
            commands::cmd_sweep(&rf, kind, &s)
        }
        Command::Demo { common } => {
            let (rf, s) = load(&common, Some(DEMO_DEFAULT))?;
            commands::cmd_demo(&rf, &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
