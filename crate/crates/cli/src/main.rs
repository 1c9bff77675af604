//! `magicsq` — command-line frontend for the Magic Square game simulator.
//!
//! Exit codes: 0 success, 1 check/computation failure, 2 usage error.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "magicsq",
    version,
    about = "Magic Square game simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// Direct two-qubit player operations (no imperfectable gates).
    Reference,
    /// Full spin–photon–spin circuits with imperfectable CZs.
    Extended,
    /// Extended circuits without the opening SWAPs, photon-homed preparation.
    ExtendedNoFirstSwap,
}

impl BackendArg {
    fn to_backend(self) -> magicsq::game::Backend {
        match self {
            BackendArg::Reference => magicsq::game::Backend::Reference,
            BackendArg::Extended => magicsq::game::Backend::Extended {
                include_initial_swap: true,
            },
            BackendArg::ExtendedNoFirstSwap => magicsq::game::Backend::Extended {
                include_initial_swap: false,
            },
        }
    }

    fn name(self) -> &'static str {
        match self {
            BackendArg::Reference => "reference",
            BackendArg::Extended => "extended",
            BackendArg::ExtendedNoFirstSwap => "extended-no-first-swap",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Write the report here instead of standard output. Relative paths
    /// resolve against $MAGICSQ_OUT_DIR when it is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the build-time verification checks and report pass/fail.
    Verify {
        /// Test hook: corrupt one decomposition angle before verifying.
        #[arg(long, hide = true)]
        corrupt_gate_table: bool,
    },
    /// Play one round: exact outcome distribution and success probability.
    Play {
        /// Row number given to Alice (1..=3).
        #[arg(long)]
        a: u8,
        /// Column number given to Bob (1..=3).
        #[arg(long)]
        b: u8,
        /// Controlled-phase imperfection, radians in [0, pi].
        #[arg(long)]
        theta: f64,
        /// Interpret --theta in degrees.
        #[arg(long)]
        degrees: bool,
        #[arg(long, value_enum, default_value = "extended")]
        backend: BackendArg,
        /// Sample this many measurement shots (requires --seed).
        #[arg(long, requires = "seed")]
        shots: Option<u64>,
        /// 64-bit seed for the shot generator (ChaCha20).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Success probabilities over a theta grid, as plot-ready CSV or JSON.
    Sweep {
        #[arg(long)]
        theta_min: f64,
        #[arg(long)]
        theta_max: f64,
        /// Interpret --theta-min and --theta-max in degrees.
        #[arg(long)]
        degrees: bool,
        /// Number of grid points including both endpoints (>= 2).
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "extended")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Brute-force the classical strategies and report the 8/9 bound.
    Classical {
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Success table, referee best response and quantum-advantage verdicts.
    Bias {
        /// Controlled-phase imperfection, radians in [0, pi].
        #[arg(long)]
        theta: f64,
        /// Interpret --theta in degrees.
        #[arg(long)]
        degrees: bool,
        #[arg(long, value_enum, default_value = "extended")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Reflection coefficients, phases and the spin–photon gate.
    Cavity {
        /// Probe photon frequency (rad/s).
        #[arg(long)]
        omega_p: f64,
        /// Cavity frequency (rad/s); defaults to omega_p (resonant).
        #[arg(long)]
        omega_c: Option<f64>,
        /// Dot transition frequency (rad/s); defaults to omega_p (resonant).
        #[arg(long)]
        omega_0: Option<f64>,
        /// Cavity decay rate (rad/s, > 0).
        #[arg(long)]
        kappa: f64,
        /// Spin decay rate (rad/s, > 0).
        #[arg(long)]
        gamma: f64,
        /// Coupling strength (rad/s, >= 0).
        #[arg(long)]
        g: f64,
        /// Insert the pi phase shifter on the reflection path.
        #[arg(long)]
        pi_shifter: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Failures carry the exit code they map to.
pub enum CmdError {
    /// Bad arguments or values outside their documented domain (exit 2).
    Usage(String),
    /// A check or computation failed (exit 1).
    Failure(String),
}

impl CmdError {
    fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Failure(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Failure(m) => m,
        }
    }
}

fn resolve_output_path(path: PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("MAGICSQ_OUT_DIR") {
            return PathBuf::from(dir).join(path);
        }
    }
    path
}

fn deliver(rendered: String, out: Option<PathBuf>) -> Result<(), CmdError> {
    match out {
        None => {
            print!("{rendered}");
            Ok(())
        }
        Some(path) => {
            let path = resolve_output_path(path);
            std::fs::write(&path, rendered)
                .map_err(|e| CmdError::Failure(format!("cannot write {}: {e}", path.display())))
        }
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Verify { corrupt_gate_table } => {
            let report = commands::run_verify(corrupt_gate_table);
            print!("{}", report.rendered);
            if let Some(first_failure) = report.first_failure {
                Err(CmdError::Failure(format!("check failed: {first_failure}")))
            } else {
                Ok(())
            }
        }
        Command::Play {
            a,
            b,
            theta,
            degrees,
            backend,
            shots,
            seed,
            format,
            out,
        } => {
            let theta = commands::to_radians(theta, degrees)?;
            let rendered = commands::run_play(a, b, theta, backend, shots, seed, format)?;
            deliver(rendered, out.output)
        }
        Command::Sweep {
            theta_min,
            theta_max,
            degrees,
            steps,
            backend,
            format,
            out,
        } => {
            let theta_min = commands::to_radians(theta_min, degrees)?;
            let theta_max = commands::to_radians(theta_max, degrees)?;
            let rendered = commands::run_sweep(theta_min, theta_max, steps, backend, format)?;
            deliver(rendered, out.output)
        }
        Command::Classical { format, out } => deliver(commands::run_classical(format), out.output),
        Command::Bias {
            theta,
            degrees,
            backend,
            format,
            out,
        } => {
            let theta = commands::to_radians(theta, degrees)?;
            let rendered = commands::run_bias(theta, backend, format)?;
            deliver(rendered, out.output)
        }
        Command::Cavity {
            omega_p,
            omega_c,
            omega_0,
            kappa,
            gamma,
            g,
            pi_shifter,
            format,
            out,
        } => {
            let rendered = commands::run_cavity(
                omega_p,
                omega_c.unwrap_or(omega_p),
                omega_0.unwrap_or(omega_p),
                kappa,
                gamma,
                g,
                pi_shifter,
                format,
            )?;
            deliver(rendered, out.output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("magicsq: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
