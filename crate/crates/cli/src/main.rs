//! `sieve`: exact computations, simulation and verification for the
//! Bernoulli sieve.

mod exact;
mod identities;
mod output;
mod simulate;
mod stationary;
mod suites;
mod tolerances;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sieve_core::{ExactCaps, MeasureOptions, Sampler, StickBreakingMeasure, TransitionKernel};

use crate::output::{OutDir, Provenance};
use crate::tolerances::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "sieve",
    version,
    about = "Exact laws, simulation and asymptotic checks for the Bernoulli sieve"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Stick-breaking measure: `beta:A,B`, `atoms:x1:p1,x2:p2,...` or `table:PATH`.
    #[arg(long, global = true, default_value = "beta:1,1")]
    measure: String,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Tolerance override `KEY=VALUE`; repeatable. `--tol help` lists the keys.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format of tabular outputs; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Rescale discrete weights that do not sum to one.
    #[arg(long, global = true)]
    normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact E K_n and Var K_n up to a horizon, optionally the law of K_N and g(N, ·).
    Exact(exact::ExactArgs),
    /// Monte Carlo summary of K_n for one sampler.
    Simulate(simulate::SimulateArgs),
    /// Run the verification suites and print a verdict table.
    Verify(verify::VerifyArgs),
    /// Largest residuals of the Bernstein summation identities.
    Identities(identities::IdentitiesArgs),
    /// Stationary potential, visit probabilities and first-part law.
    Stationary(stationary::StationaryArgs),
}

/// Everything a command needs besides its own flags.
pub struct RunContext {
    pub measure: StickBreakingMeasure,
    pub provenance: Provenance,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub format: Option<Format>,
    pub seed: u64,
}

impl RunContext {
    pub fn kernel(&self) -> TransitionKernel {
        TransitionKernel::with_caps(self.measure.clone(), ExactCaps::from_env())
    }

    pub fn out_dir(&self) -> Result<OutDir> {
        OutDir::create(&self.out)
    }

    pub fn warn_if_lattice(&self) {
        if self.measure.is_lattice() {
            eprintln!(
                "warning: {} is lattice; exact values are valid but the asymptotic expansions do not apply",
                self.measure.descriptor()
            );
        }
    }
}

/// Parses `--sampler`.
pub fn parse_sampler(s: &str) -> std::result::Result<Sampler, String> {
    s.parse::<Sampler>().map_err(|e| e.to_string())
}

fn run(cli: Cli, args: &[String]) -> Result<ExitCode> {
    let g = cli.global;
    let tolerances = Tolerances::from_overrides(&g.tol)?;
    let options = MeasureOptions {
        normalize: g.normalize,
        ..MeasureOptions::default()
    };
    let measure = StickBreakingMeasure::parse(&g.measure, options)
        .with_context(|| format!("cannot build measure `{}`", g.measure))?;
    let ctx = RunContext {
        provenance: Provenance::new(&measure.descriptor().to_string(), g.seed, args),
        measure,
        tolerances,
        out: g.out,
        format: g.format,
        seed: g.seed,
    };
    match cli.command {
        Command::Exact(a) => exact::run(&ctx, &a).map(|_| ExitCode::SUCCESS),
        Command::Simulate(a) => simulate::run(&ctx, &a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => verify::run(&ctx, &a),
        Command::Identities(a) => identities::run(&ctx, &a).map(|_| ExitCode::SUCCESS),
        Command::Stationary(a) => stationary::run(&ctx, &a).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&args);
    match run(cli, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
