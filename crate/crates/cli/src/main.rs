//! `scarsim` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical validation
//! failure. `SCARSIM_THREADS` caps the worker threads.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scarsim::dynamics::{InitialSpec, Integrator, Observable, XyMixing};
use scarsim::liouvillian::NhForm;
use scarsim::trajectory::Protocol;
use scarsim::ModelKind;

use crate::config::{load_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] scarsim::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use scarsim::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Core(E::Validation(_) | E::TowerResidual(_) | E::Eigensolver(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scarsim", version, about = "Lindblad Liouvillians with scar-tower decoherence-free subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full Liouvillian spectrum by exact diagonalization.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest Hilbert dimension accepted for the superoperator.
        #[arg(long)]
        cap: Option<usize>,
        /// |Re λ| below this counts as purely imaginary.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Spectrum of the non-Hermitian Hamiltonian.
    NhSpectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = parse_form)]
        form: Option<NhForm>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Deterministic Lindblad evolution of observables.
    Dynamics {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        dt_out: Option<f64>,
        #[arg(long, value_parser = parse_integrator)]
        integrator: Option<Integrator>,
        /// Comma-separated observable names.
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<Observable>>,
    },
    /// Quantum-trajectory ensemble of the digital ancilla protocol.
    Trajectories {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        n_traj: Option<usize>,
        #[arg(long)]
        master_seed: Option<u64>,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<Observable>>,
    },
    /// Derive the annihilating local projectors from the compressed MPS.
    Projectors {
        #[command(flatten)]
        common: CommonArgs,
        /// Window length, 2 or 3.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Residual checks for the tower, the DFS and the AKLT special states.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Chain length.
    #[arg(long = "L", alias = "len")]
    len: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    coupling_seed: Option<u64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "D")]
    d: Option<f64>,
    /// AKLT: leave out the three-site dissipators.
    #[arg(long)]
    two_local_only: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    /// DW: open chain with single-site end jumps.
    #[arg(long)]
    experimental_boundary: bool,
    /// Uniform jump rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated per-jump rates.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Output path; CSV outputs get a `.json` sidecar next to them.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InitialArgs {
    /// Initial state kind, e.g. tilted_product, random_density, xy_product.
    #[arg(long)]
    initial: Option<String>,
    /// Seed for random initial-state draws.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_parser = parse_mixing)]
    mixing: Option<XyMixing>,
    /// Tower index for tower_member.
    #[arg(long)]
    tower_index: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: scarsim::Error| e.to_string())
}

fn parse_snake<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_form(s: &str) -> Result<NhForm, String> {
    parse_snake(s)
}

fn parse_integrator(s: &str) -> Result<Integrator, String> {
    parse_snake(s)
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    parse_snake(s)
}

fn parse_mixing(s: &str) -> Result<XyMixing, String> {
    parse_snake(s)
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            model: self.model,
            len: self.len,
            omega: self.omega,
            coupling_seed: self.coupling_seed,
            h: self.h,
            d: self.d,
            include_three_local: self.two_local_only.then_some(false),
            delta: self.delta,
            j: self.j,
            experimental_boundary: self.experimental_boundary.then_some(true),
            gamma: self.gamma,
            rates: self.rates.clone(),
            out: self.out.clone(),
            ..Default::default()
        };
        Ok(base.overlay(flags))
    }
}

impl InitialArgs {
    /// A kind flag replaces the configured state; parameter flags then
    /// adjust whichever state is in effect.
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(kind) = &self.initial {
            cfg.initial = Some(InitialSpec::from_kind(kind).map_err(|e| CliError::Usage(e.to_string()))?);
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        let Some(spec) = cfg.initial.as_mut() else {
            return Ok(());
        };
        match spec {
            InitialSpec::TiltedProduct { theta } => set(theta, self.theta),
            InitialSpec::RandomProduct { theta_max }
            | InitialSpec::DwMpsPerturbed { theta_max } => set(theta_max, self.theta_max),
            InitialSpec::AkltCompressed { beta, theta_max } => {
                set(beta, self.beta);
                set(theta_max, self.theta_max);
            }
            InitialSpec::XyProduct { mixing } => set(mixing, self.mixing),
            InitialSpec::TowerMember { n } => set(n, self.tower_index),
            _ => {}
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("SCARSIM_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| CliError::Usage(format!("SCARSIM_THREADS must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum { common, cap, tol } => {
            let mut cfg = common.resolve()?;
            set(&mut cfg.cap, cap.map(Some));
            set(&mut cfg.tol, tol.map(Some));
            commands::spectrum(&cfg)
        }
        Command::NhSpectrum { common, form, tol } => {
            let mut cfg = common.resolve()?;
            set(&mut cfg.form, form.map(Some));
            set(&mut cfg.tol, tol.map(Some));
            commands::nh_spectrum(&cfg)
        }
        Command::Dynamics { common, initial, t_max, dt_out, integrator, observables } => {
            let mut cfg = common.resolve()?;
            initial.apply(&mut cfg)?;
            set(&mut cfg.t_max, t_max.map(Some));
            set(&mut cfg.dt_out, dt_out.map(Some));
            set(&mut cfg.integrator, integrator.map(Some));
            set(&mut cfg.observables, observables.map(Some));
            commands::dynamics(&cfg)
        }
        Command::Trajectories { common, initial, dt, t_max, n_traj, master_seed, protocol, observables } => {
            let mut cfg = common.resolve()?;
            initial.apply(&mut cfg)?;
            set(&mut cfg.dt, dt.map(Some));
            set(&mut cfg.t_max, t_max.map(Some));
            set(&mut cfg.n_traj, n_traj.map(Some));
            set(&mut cfg.master_seed, master_seed.map(Some));
            set(&mut cfg.protocol, protocol.map(Some));
            set(&mut cfg.observables, observables.map(Some));
            commands::trajectories(&cfg)
        }
        Command::Projectors { common, window } => {
            let mut cfg = common.resolve()?;
            set(&mut cfg.window, window.map(Some));
            commands::projectors(&cfg)
        }
        Command::Verify { common } => commands::verify(&common.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scarsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
