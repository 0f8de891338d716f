use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msd_relax_cli::{
    cmd_approx, cmd_decompose, cmd_density, cmd_functional, cmd_paper_cases, cmd_verify, exit_code, CliError, Settings,
    Status,
};

/// Worker threads; overrides `--threads` when set.
const THREADS_ENV: &str = "MSD_RELAX_THREADS";

#[derive(Parser)]
#[command(name = "msd-relax", version, about = "Relaxed energies of measure structured deformations")]
struct Cli {
    /// JSON problem file.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output file (directory for paper-cases); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for solver sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sandwich tolerance for density estimates.
    #[arg(long, global = true, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density table (H, h^c or h^j per cell query) as CSV.
    Density,
    /// Relaxed functional J, with Dirichlet and penalty variants, as JSON.
    Functional,
    /// Parts of G relative to Dg as JSON.
    Decompose,
    /// Approximation experiment as CSV.
    Approx,
    /// Reproduce the worked cases into the --out directory.
    PaperCases,
    /// Property suite over the energy catalog.
    Verify {
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Spec(format!("{THREADS_ENV}: expected a thread count, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    if let Some(n) = threads(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Spec(format!("thread pool: {e}")))?;
    }
    let settings = Settings { tol: cli.tol, seed: cli.seed };
    let spec = || cli.spec.as_deref().ok_or_else(|| CliError::Spec("--spec is required".into()));
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Density => cmd_density(spec()?, out, &settings),
        Command::Functional => cmd_functional(spec()?, out, &settings),
        Command::Decompose => cmd_decompose(spec()?, out, &settings),
        Command::Approx => cmd_approx(spec()?, out, &settings),
        Command::PaperCases => {
            let dir = out.ok_or_else(|| CliError::Spec("--out <DIR> is required".into()))?;
            cmd_paper_cases(dir, &settings)
        }
        Command::Verify { budget } => cmd_verify(cli.seed, *budget, out, &settings),
    }
}

fn main() -> ExitCode {
    // Usage errors share the exit code of malformed input.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = run(&cli);
    match &result {
        Err(e) => eprintln!("error: {e}"),
        Ok(Status::Flagged(msg)) => eprintln!("flagged: {msg}"),
        Ok(Status::Failed(msg)) => eprintln!("failed: {msg}"),
        Ok(Status::Ok) => {}
    }
    ExitCode::from(exit_code(&result))
}
