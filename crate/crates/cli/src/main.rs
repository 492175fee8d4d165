use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ordsearch::adversary::{Problem, DEFAULT_SEED};

mod commands;
mod report;

use report::Report;

/// Exact ordered search on pebbled trees, and its lower-bound checks.
#[derive(Parser, Debug)]
#[command(name = "ordsearch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the report as JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Seed recorded in the report and used by randomized steps.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Lift the size caps.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search one oracle whose answer is --target.
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        target: usize,
        /// Write the state after every step as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Use this covering certificate for the outer level.
        #[arg(long)]
        covering: Option<PathBuf>,
    },
    /// Check exactness on every oracle for all even sizes up to --n-max.
    Verify {
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Verify this covering certificate's size only, using it.
        #[arg(long)]
        covering: Option<PathBuf>,
    },
    /// Progress trace (CSV) of an exact algorithm over the adversary ensemble.
    Adversary {
        #[arg(long, default_value = "search")]
        problem: Problem,
        #[arg(long)]
        n: usize,
        /// CSV destination; stdout (with the report on stderr) if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral norm of the truncated Hilbert section B_n.
    Hilbert {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Closed-form query lower bound.
    Bounds {
        #[arg(long, default_value = "search")]
        problem: Problem,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// The idealised recursion F̃(n) next to ⌈log₃ n⌉.
    Ftilde {
        #[arg(long)]
        n: usize,
    },
    /// Build (or load) a covering and validate it.
    Cover {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        covering: Option<PathBuf>,
        /// Write the certificate here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A precondition violated by the flags; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let mut report = Report::new(echo, cli.seed);
    let start = Instant::now();
    let force = cli.force;
    let mut report_to_stderr = false;
    let result = match &cli.command {
        Command::Run {
            n,
            target,
            trace,
            covering,
        } => commands::run(
            *n,
            *target,
            trace.as_ref(),
            covering.as_ref(),
            force,
            &mut report,
        ),
        Command::Verify {
            n_max,
            tol,
            covering,
        } => commands::verify(*n_max, *tol, covering.as_ref(), force, &mut report),
        Command::Adversary { problem, n, out } => {
            report_to_stderr = out.is_none();
            commands::adversary(*problem, *n, out.as_ref(), force, &mut report)
        }
        Command::Hilbert { n, tol } => commands::hilbert(*n, *tol, cli.seed, force, &mut report),
        Command::Bounds { problem, n, eps } => commands::bounds(*problem, *n, *eps, &mut report),
        Command::Ftilde { n } => commands::ftilde(*n, &mut report),
        Command::Cover { n, covering, out } => {
            commands::cover(*n, covering.as_ref(), out.as_ref(), force, &mut report)
        }
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        return ExitCode::from(if err.is::<Usage>() { 2 } else { 1 });
    }
    report.elapsed_ms = Some(start.elapsed().as_millis());
    let text = if cli.json {
        report.to_json()
    } else {
        report.to_string()
    };
    if report_to_stderr {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
    ExitCode::from(if report.passed() { 0 } else { 1 })
}
