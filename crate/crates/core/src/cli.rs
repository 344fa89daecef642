//! Command-line front end: `run`, `validate` and `repro`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::harness::{self, ExperimentConfig, ProblemKind, ResultRow};
use crate::solvers::Algorithm;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vi-extragrad",
    version,
    about = "Extragradient solvers for monotone variational inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run solvers on one benchmark problem and write a CSV trace.
    Run {
        #[arg(long, default_value = "ex1", value_parser = parse_problem)]
        problem: ProblemKind,
        /// Comma-separated algorithm ids (default: all seven).
        #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
        algos: Vec<Algorithm>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Defaults to 200 (50 for ex3).
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop when ||w_n - y_n|| falls to this value (off by default).
        #[arg(long)]
        stop_tol: Option<f64>,
    },
    /// Check monotonicity, Lipschitz bound, gradient and solution of a problem.
    Validate {
        #[arg(long, default_value = "ex1", value_parser = parse_problem)]
        problem: ProblemKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run all three benchmark comparisons with default settings.
    Repro {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        _ => EXIT_SOLVER_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Run {
            problem,
            algos,
            seed,
            trials,
            max_iter,
            m,
            grid_points,
            out,
            stop_tol,
        } => {
            let mut cfg = ExperimentConfig::benchmark(problem, seed);
            if !algos.is_empty() {
                cfg.algorithms = algos;
            }
            cfg.n_trials = trials;
            cfg.max_iter = max_iter.unwrap_or(problem.default_max_iter());
            cfg.m = m;
            cfg.grid_points = grid_points;
            cfg.stop_tol = stop_tol;
            cfg.output_path = out.clone();
            let rows = harness::run_experiment(&cfg)?;
            match &out {
                Some(path) => harness::write_csv(&rows, path)?,
                None => {
                    let stdout = std::io::stdout();
                    harness::write_csv_to(&rows, stdout.lock()).map_err(|source| Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })?;
                }
            }
            Ok(if rows.iter().any(ResultRow::is_failure) {
                EXIT_SOLVER_FAILURE
            } else {
                EXIT_OK
            })
        }
        Command::Validate {
            problem,
            seed,
            m,
            grid_points,
            samples,
        } => {
            let mut cfg = ExperimentConfig::benchmark(problem, seed);
            cfg.m = m;
            cfg.grid_points = grid_points;
            cfg.validate()?;
            let lines = harness::validate_problem(&cfg, samples)?;
            let mut out = std::io::stdout().lock();
            for line in &lines {
                let _ = writeln!(out, "{line}");
            }
            Ok(if lines.iter().all(|l| l.passed) {
                EXIT_OK
            } else {
                EXIT_SOLVER_FAILURE
            })
        }
        Command::Repro { seed, out_dir } => {
            let (paths, failed) = harness::repro(&out_dir, seed)?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
            Ok(if failed { EXIT_SOLVER_FAILURE } else { EXIT_OK })
        }
    }
}
