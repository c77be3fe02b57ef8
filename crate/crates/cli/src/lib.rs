//! Command-line front end for the `ncquant` checks: `verify`, `bracket`,
//! `spectrum` and `dirac`. Exit codes: 0 pass, 1 check failure, 2 usage or
//! configuration error.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{BracketArgs, DiracArgs, Outcome, SpectrumArgs};
use config::{CliError, CommonArgs};

#[derive(Debug, Parser)]
#[command(name = "ncquant", version, about = "Poisson brackets, action-angle charts and their quantization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full invariant battery and report every check
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute {f, g} under a Poisson structure and evaluate it at points
    Bracket {
        f: Option<String>,
        g: Option<String>,
        /// so3-liepoisson, so3-aa or canonical
        #[arg(long)]
        structure: Option<String>,
        /// JSON bivector {"chart": [...], "components": [[...]]}
        #[arg(long, conflicts_with = "structure")]
        bivector: Option<PathBuf>,
        /// Evaluation point `name=value,...`; repeatable. Seeded random points otherwise
        #[arg(long)]
        at: Vec<String>,
        /// Number of random points when no --at is given
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build H(P^) for a polynomial in the actions and print its spectrum by Fourier mode
    Spectrum {
        /// Hamiltonian; `I` stands for --inertia
        #[arg(long)]
        hamiltonian: Option<String>,
        /// so3 (r/alpha, x1/gamma) or canonical (J/alpha, p/q)
        #[arg(long)]
        phase_space: Option<String>,
        /// Also write the dense matrix as CSV
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dirac residual of two affine observables over a grid ladder
    Dirac {
        f: Option<String>,
        g: Option<String>,
        /// Grid resolutions, e.g. 51,101,201
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        #[arg(long)]
        phase_space: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn required(value: Option<String>, name: &str) -> Result<String, CliError> {
    value.ok_or_else(|| CliError::usage(format!("missing `{}` (argument or config key)", name)))
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Verify { common } => {
            let (s, _) = common.resolve()?;
            commands::cmd_verify(&s)
        }
        Command::Bracket { f, g, structure, bivector, at, samples, common } => {
            let (s, file) = common.resolve()?;
            let args = BracketArgs {
                f: required(f.or(file.f), "f")?,
                g: required(g.or(file.g), "g")?,
                structure: structure.or(file.structure),
                bivector: bivector.or(file.bivector),
                at: if at.is_empty() { file.at.unwrap_or_default() } else { at },
                samples: samples.or(file.samples).unwrap_or(5),
            };
            commands::cmd_bracket(&s, &args)
        }
        Command::Spectrum { hamiltonian, phase_space, matrix_out, common } => {
            let (s, file) = common.resolve()?;
            let args = SpectrumArgs {
                hamiltonian: hamiltonian.or(file.hamiltonian),
                phase_space: phase_space.or(file.phase_space),
                matrix_out: matrix_out.or(file.matrix_out),
            };
            commands::cmd_spectrum(&s, &args)
        }
        Command::Dirac { f, g, ladder, phase_space, common } => {
            let (s, file) = common.resolve()?;
            let args = DiracArgs {
                f: required(f.or(file.f), "f")?,
                g: required(g.or(file.g), "g")?,
                ladder: ladder.or(file.ladder),
                phase_space: phase_space.or(file.phase_space),
            };
            commands::cmd_dirac(&s, &args)
        }
    }
}

/// Output destination of a command line, if it sets `--out` or a config `out`.
pub fn output_path(cli: &Cli) -> Result<Option<PathBuf>, CliError> {
    let common = match &cli.command {
        Command::Verify { common }
        | Command::Bracket { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Dirac { common, .. } => common,
    };
    Ok(common.resolve()?.0.out)
}
