use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlink_core::QlmError;

mod commands;
mod config;

use commands::{CliError, Context};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "qlink", version, about = "Quantum link model simulator")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed (and the noise seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the dense-matrix dimension budget.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the physical basis and its winding sectors.
    Basis,
    /// Lowest eigenvalues of the physical Hamiltonian.
    Spectrum {
        /// Drop the magnetic term.
        #[arg(long)]
        electric_only: bool,
        /// Compare with the full-space spectrum of H + λ·penalty.
        #[arg(long, value_name = "LAMBDA")]
        penalty_check: Option<f64>,
    },
    /// Trotterized time evolution with observables and optional noise.
    Evolve,
    /// Run the verification suite.
    Check,
    /// Leakage under a gauge-breaking perturbation for a grid of penalty strengths.
    PenaltySweep,
    /// Invariance of the SU(3) meson and baryon singlets under random transforms.
    Su3Singlet {
        #[arg(long, default_value_t = 20)]
        draws: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Spectrum { .. } => "spectrum",
            Command::Evolve => "evolve",
            Command::Check => "check",
            Command::PenaltySweep => "penalty-sweep",
            Command::Su3Singlet { .. } => "su3-singlet",
        }
    }
}

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Io(_) => EXIT_INVARIANT,
        CliError::Core(e) => match e {
            QlmError::BudgetExceeded { .. } => EXIT_BUDGET,
            QlmError::InvalidLattice(_)
            | QlmError::InvalidModel(_)
            | QlmError::InvalidCharges(_)
            | QlmError::InvalidPath(_)
            | QlmError::FluxOutOfRange { .. }
            | QlmError::MissingState(_)
            | QlmError::BasisMismatch { .. }
            | QlmError::Serialization(_)
            | QlmError::InvalidArgument(_) => EXIT_CONFIG,
            _ => EXIT_INVARIANT,
        },
    }
}

fn load(cli: &Cli) -> Result<RunConfig, QlmError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Command::Spectrum { electric_only: true, .. } = cli.command {
        cfg.magnetic = false;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        if let Some(n) = cfg.noise.as_mut() {
            n.seed = seed;
        }
    }
    if let Some(b) = cli.budget {
        cfg.budget.dense = b;
    }
    cfg.resolve()
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let ctx = Context {
        config: load(cli)?,
        out: cli.out.clone(),
        command: cli.command.name(),
    };
    match &cli.command {
        Command::Basis => commands::basis(&ctx),
        Command::Spectrum { penalty_check, .. } => commands::spectrum_cmd(&ctx, *penalty_check),
        Command::Evolve => commands::evolve(&ctx),
        Command::Check => commands::check(&ctx, cli.config.is_some()),
        Command::PenaltySweep => commands::penalty_sweep(&ctx),
        Command::Su3Singlet { draws } => commands::su3_singlet(&ctx, *draws),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("qlink {}: invariant check failed", cli.command.name());
            ExitCode::from(EXIT_INVARIANT)
        }
        Err(e) => {
            eprintln!("qlink {}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
