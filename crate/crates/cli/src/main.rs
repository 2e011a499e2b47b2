//! `pflab`: experiments on the solvable line of the ℤ₃ parafermion chain.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};

use config::{CommandKind, ConfigError, Diagnostic, ExperimentConfig, Format};

/// Exit codes besides 0 (success).
const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_RESOURCE_CAP: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error:\n{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] pflab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} check(s) failed")]
    Checks(usize),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use pflab::Error as E;
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Core(E::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            Failure::Core(E::DimensionCap { .. }) => EXIT_RESOURCE_CAP,
            Failure::Core(
                E::InvalidParameter(_)
                | E::InvalidCharge(_)
                | E::SiteOutOfRange { .. }
                | E::IndexOutOfRange { .. }
                | E::BondOutOfRange { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_FAILED_CHECKS,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "pflab",
    version,
    about = "Exact and numerical experiments on the solvable Z3 parafermion chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config file.
    Run { config: PathBuf },
    /// Exact operator identities, solvability and parent-Hamiltonian checks.
    VerifyAlgebra(Flags),
    /// G_0(l), density split, correlation length and F_0(l) panels.
    Figure2(Flags),
    /// Entanglement spectrum and entropy against the cut position.
    #[command(name = "figure3-top")]
    Figure3Top(Flags),
    /// DMRG gap along the solvable line.
    #[command(name = "figure3-gap")]
    Figure3Gap(Flags),
    /// Domain-wall splittings Delta_1 and Delta_4 against L.
    Inset(Flags),
    /// Sector-resolved low-lying spectrum by exact diagonalization.
    Ed(Flags),
    /// Agreement of the three ground-state constructions and parent annihilation.
    GsCheck(Flags),
    /// Closed-form G_i(l), F_i(l) and densities, with an MPS cross-check of G.
    Correlators(Flags),
    /// Closed-form entanglement spectra and entropies.
    Entanglement(Flags),
    /// Perturbative edge-mode report (JSON).
    EdgeMode(Flags),
    /// Sector ground states by two-site DMRG.
    Dmrg(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Comma-separated φ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    phi: Option<Vec<f64>>,
    /// Comma-separated chain lengths.
    #[arg(long = "L", value_delimiter = ',')]
    sites: Option<Vec<usize>>,
    /// Largest chain length of the inset scan.
    #[arg(long = "Lmax")]
    lmax: Option<usize>,
    /// Comma-separated charge sectors.
    #[arg(long = "i", value_delimiter = ',')]
    charge: Option<Vec<u8>>,
    /// Inclusive range `first,last` of ℓ.
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<usize>>,
    /// Comma-separated edge-mode amplitudes α.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Levels kept per sector.
    #[arg(long)]
    levels: Option<usize>,
    /// Include the boundary term H_B.
    #[arg(long, value_name = "BOOL")]
    with_boundary: Option<bool>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long = "chi")]
    chi_max: Option<usize>,
    #[arg(long = "sweeps")]
    max_sweeps: Option<usize>,
    #[arg(long)]
    energy_tol: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Manifest file (defaults to `<out>.manifest.json` when `--out` is set).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: CommandKind) -> Result<ExperimentConfig, ConfigError> {
        let ell = match self.ell {
            None => None,
            Some(v) if v.len() == 2 => Some([v[0], v[1]]),
            Some(v) => {
                return Err(ConfigError {
                    diagnostics: vec![Diagnostic {
                        field: "ell".into(),
                        line: None,
                        message: format!("expected `first,last`, got {} values", v.len()),
                    }],
                })
            }
        };
        let mut c = ExperimentConfig::new(command);
        c.phi = self.phi;
        c.sites = self.sites;
        c.lmax = self.lmax;
        c.charge = self.charge;
        c.ell = ell;
        c.alpha = self.alpha;
        c.levels = self.levels;
        c.with_boundary = self.with_boundary;
        c.solver.tol = self.tol;
        c.solver.max_iter = self.max_iter;
        c.solver.chi_max = self.chi_max;
        c.solver.max_sweeps = self.max_sweeps;
        c.solver.energy_tol = self.energy_tol;
        c.solver.cutoff = self.cutoff;
        c.seed = self.seed;
        c.output.path = self.out;
        c.output.format = self.format;
        c.output.manifest = self.manifest;
        Ok(c)
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("PFLAB_THREADS") else {
        return Ok(());
    };
    let diag = |message: String| ConfigError {
        diagnostics: vec![Diagnostic {
            field: "PFLAB_THREADS".into(),
            line: None,
            message,
        }],
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| diag(format!("`{raw}` is not a thread count")))?;
    if n == 0 {
        return Err(diag("must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| diag(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (cfg, source) = match cli.command {
        Cmd::Run { config } => {
            let (cfg, text) = ExperimentConfig::load(&config)?;
            (cfg, Some(text))
        }
        Cmd::VerifyAlgebra(f) => (f.into_config(CommandKind::VerifyAlgebra)?, None),
        Cmd::Figure2(f) => (f.into_config(CommandKind::Figure2)?, None),
        Cmd::Figure3Top(f) => (f.into_config(CommandKind::Figure3Top)?, None),
        Cmd::Figure3Gap(f) => (f.into_config(CommandKind::Figure3Gap)?, None),
        Cmd::Inset(f) => (f.into_config(CommandKind::Inset)?, None),
        Cmd::Ed(f) => (f.into_config(CommandKind::Ed)?, None),
        Cmd::GsCheck(f) => (f.into_config(CommandKind::GsCheck)?, None),
        Cmd::Correlators(f) => (f.into_config(CommandKind::Correlators)?, None),
        Cmd::Entanglement(f) => (f.into_config(CommandKind::Entanglement)?, None),
        Cmd::EdgeMode(f) => (f.into_config(CommandKind::EdgeMode)?, None),
        Cmd::Dmrg(f) => (f.into_config(CommandKind::Dmrg)?, None),
    };
    let exp = cfg.resolve(source.as_deref())?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = commands::run(&exp)?;
    output::write_outputs(&exp, &outcome.artifact, started, clock.elapsed())?;
    if outcome.failed > 0 {
        return Err(Failure::Checks(outcome.failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pflab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
