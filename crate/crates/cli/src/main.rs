mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{parse_values, RunConfig, SweepConfig};
use error::CliError;

/// Eigenvalue bounds and stable explicit time steps for finite-element diffusion.
#[derive(Parser)]
#[command(name = "stepbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write bounds.json and bounds.csv.
    Bounds(Flags),
    /// Step the semi-discrete system; writes trace.csv and summary.json.
    Integrate(Flags),
    /// One bounds row per value of a single parameter; writes sweep.csv.
    Sweep(SweepFlags),
    /// Write the mesh to <out>/mesh.txt.
    MeshGen(Flags),
    /// Check the matrix inequalities on the assembled system.
    Validate(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator spec (`structured:nx=8,ny=8`, JSON) or mesh file.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// `identity`, `isotropic:value=2`, `rotated_anisotropic:angle=0.52,eigenvalues=1/100` or JSON.
    #[arg(long)]
    diffusion: Option<String>,
    /// consistent, hrz_diagonal or node_quadrature
    #[arg(long)]
    policy: Option<String>,
    /// explicit_euler, heun2, kutta3 or classic_rk4
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated bound sources for the time step: exact, diag_ratio, geometric.
    #[arg(long)]
    bounds: Option<String>,
    /// Time step override.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Initial data: top, smooth or random.
    #[arg(long)]
    initial: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the exact eigenvalue above this many DOFs.
    #[arg(long)]
    dof_cap: Option<usize>,
    /// Random vectors per sampled inequality check.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct SweepFlags {
    #[command(flatten)]
    flags: Flags,
    /// n, order, anisotropy or policy
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated values.
    #[arg(long)]
    values: Option<String>,
}

impl Flags {
    fn into_config(self, sweep: Option<SweepConfig>) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            mesh: self.mesh.map(Value::String),
            order: self.order,
            diffusion: self.diffusion.map(Value::String),
            policy: self.policy,
            scheme: self.scheme,
            bounds: self
                .bounds
                .map(|b| b.split(',').map(|s| s.trim().to_string()).collect()),
            tau: self.tau,
            steps: self.steps,
            initial: self.initial,
            out: self.out,
            seed: self.seed,
            dof_cap: self.dof_cap,
            samples: self.samples,
            sweep,
        };
        Ok(base.overlay(flags))
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bounds(f) => commands::bounds(&f.into_config(None)?.resolve()?),
        Command::Integrate(f) => commands::integrate_cmd(&f.into_config(None)?.resolve()?),
        Command::MeshGen(f) => commands::mesh_gen(&f.into_config(None)?.resolve()?),
        Command::Validate(f) => commands::validate(&f.into_config(None)?.resolve()?),
        Command::Sweep(s) => {
            let sweep = (s.axis.is_some() || s.values.is_some()).then(|| SweepConfig {
                axis: s.axis,
                values: s.values.as_deref().map(parse_values),
            });
            commands::sweep(&s.flags.into_config(sweep)?.resolve()?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.render().to_string();
            let line = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            let err = CliError::Config(line.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
