//! `esn`: simulate, evaluate, classify and verify extremal shot noise.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use esn_core::EsnError;

use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "esn", version, about = "Extremal shot noise: simulation, closed-form laws and verification")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for Monte Carlo checks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Inline measure JSON, e.g. '{"family":"exponential","c":1,"lambda":1}', or a table CSV path.
    #[arg(long, global = true)]
    measure: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    x0: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Truncation level, or "auto".
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Replicates for Monte Carlo checks.
    #[arg(long, global = true)]
    n: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path; writes a grid CSV and the exact event skeleton.
    Simulate {
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Evaluate a closed-form quantity on a grid; writes (inputs, value, abs_err) rows.
    Eval {
        which: EvalKind,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        u: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Test functions for `generator`.
        #[arg(long, value_delimiter = ',')]
        functions: Option<Vec<String>>,
    },
    /// Recurrence, accessibility and cutout classification as JSON.
    Classify,
    /// Sample the random cutout set; optionally sweep decreasing truncation levels.
    Cutout {
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Run a verification suite; exits 1 when any check fails.
    Verify {
        #[arg(long)]
        suite: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Cdf,
    Fdd,
    Stationary,
    Ftheta,
    Phi,
    Generator,
}

#[derive(Debug)]
pub enum CliError {
    CheckFailed(String),
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<EsnError> for CliError {
    fn from(e: EsnError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let over = Overrides {
        measure: cli.measure,
        b: cli.b,
        x0: cli.x0,
        horizon: cli.horizon,
        eps: cli.eps,
        seed: cli.seed,
        n: cli.n,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &over)?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Simulate { grid_step } => commands::simulate(&cfg, grid_step, out),
        Command::Eval { which, x, t, u, theta, functions } => {
            let mut grid = cfg.eval.clone();
            grid.x = x.or(grid.x);
            grid.t = t.or(grid.t);
            grid.u = u.or(grid.u);
            grid.theta = theta.or(grid.theta);
            grid.functions = functions.or(grid.functions);
            commands::eval(&cfg, which, &grid, out)
        }
        Command::Classify => commands::classify(&cfg, out),
        Command::Cutout { sweep } => commands::cutout(&cfg, sweep.or(cfg.cutout_sweep.clone()), out),
        Command::Verify { suite } => commands::verify(&cfg, &suite, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("esn: {e}");
            ExitCode::from(e.code())
        }
    }
}
