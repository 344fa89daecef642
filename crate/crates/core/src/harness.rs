//! Experiment orchestration and CSV persistence.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{Grid, HVec};
use crate::problems::{self, ProblemInstance};
use crate::rng;
use crate::solvers::{Algorithm, IterationRecord, Schedules, Solver};

pub const CSV_HEADER: [&str; 9] = [
    "problem",
    "algorithm",
    "trial",
    "iter",
    "error",
    "residual",
    "lambda",
    "theta",
    "elapsed_ms",
];

/// Written in the `error` column of a row that marks a failed run.
pub const FAILED_SENTINEL: &str = "failed";

/// Caps run-level parallelism when set to a positive integer.
pub const THREADS_ENV: &str = "VI_EXTRAGRAD_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    Ex1,
    Ex2,
    Ex3,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::Ex1, ProblemKind::Ex2, ProblemKind::Ex3];

    pub fn id(self) -> &'static str {
        match self {
            ProblemKind::Ex1 => "ex1",
            ProblemKind::Ex2 => "ex2",
            ProblemKind::Ex3 => "ex3",
        }
    }

    pub fn default_max_iter(self) -> usize {
        match self {
            ProblemKind::Ex3 => 50,
            _ => 200,
        }
    }

    pub fn default_init(self) -> InitStyle {
        match self {
            ProblemKind::Ex1 => InitStyle::RandUnit,
            ProblemKind::Ex2 => InitStyle::RandScaled(10.0),
            ProblemKind::Ex3 => InitStyle::ExpProfile,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|p| p.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::usage(format!("unknown problem '{s}', expected ex1, ex2 or ex3")))
    }
}

/// How `x0 = x1` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitStyle {
    /// Uniform on `[0, 1]^d`.
    RandUnit,
    /// Uniform on `[0, k]^d`.
    RandScaled(f64),
    /// `10 e^t` sampled on the grid.
    ExpProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub algorithms: Vec<Algorithm>,
    pub m: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub n_trials: usize,
    pub max_iter: usize,
    pub init_style: InitStyle,
    /// `None` runs every algorithm for exactly `max_iter` iterations.
    pub stop_tol: Option<f64>,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// All seven algorithms with the benchmark settings for `problem`.
    pub fn benchmark(problem: ProblemKind, seed: u64) -> Self {
        Self {
            problem,
            algorithms: Algorithm::ALL.to_vec(),
            m: 5,
            grid_points: Grid::DEFAULT_POINTS,
            seed,
            n_trials: 1,
            max_iter: problem.default_max_iter(),
            init_style: problem.default_init(),
            stop_tol: None,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::usage("at least one algorithm is required"));
        }
        if self.max_iter < 1 {
            return Err(Error::usage("max_iter must be at least 1"));
        }
        if self.n_trials < 1 {
            return Err(Error::usage("trials must be at least 1"));
        }
        if self.m < 1 {
            return Err(Error::usage("m must be at least 1"));
        }
        Grid::new(self.grid_points)?;
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }
}

pub fn build_problem(cfg: &ExperimentConfig, trial: usize) -> Result<ProblemInstance> {
    Ok(match cfg.problem {
        ProblemKind::Ex1 => problems::make_example1(),
        ProblemKind::Ex2 => problems::make_example2(cfg.m, cfg.trial_seed(trial))?,
        ProblemKind::Ex3 => problems::make_example3(Grid::new(cfg.grid_points)?),
    })
}

/// Starting points `x0 = x1` for one trial.
pub fn build_initial_points(
    cfg: &ExperimentConfig,
    p: &ProblemInstance,
    trial: usize,
) -> Result<(HVec, HVec)> {
    if trial >= cfg.n_trials {
        return Err(Error::usage(format!(
            "trial {trial} out of range for {} trials",
            cfg.n_trials
        )));
    }
    let mut rng = rng::stream(cfg.trial_seed(trial), rng::STREAM_START);
    let x0 = match cfg.init_style {
        InitStyle::RandUnit => {
            let c = (0..p.dim()).map(|_| rng::uniform(&mut rng, 0.0, 1.0)).collect();
            p.x_star.with_coords(c)?
        }
        InitStyle::RandScaled(k) => {
            let c = (0..p.dim()).map(|_| k * rng::uniform(&mut rng, 0.0, 1.0)).collect();
            p.x_star.with_coords(c)?
        }
        InitStyle::ExpProfile => {
            let grid = p
                .grid
                .ok_or_else(|| Error::usage("the exponential start needs a grid problem"))?;
            HVec::sample(&grid, |t| 10.0 * t.exp())?
        }
    };
    p.x_star.check_compatible(&x0)?;
    Ok((x0.clone(), x0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub problem: String,
    pub algorithm: String,
    pub trial: usize,
    pub iter: usize,
    /// NaN on a failure row.
    pub error: f64,
    pub residual: f64,
    pub lambda: f64,
    pub theta: f64,
    pub elapsed_ms: f64,
}

impl ResultRow {
    pub fn is_failure(&self) -> bool {
        self.error.is_nan()
    }

    fn from_record(problem: ProblemKind, alg: Algorithm, trial: usize, r: &IterationRecord) -> Self {
        Self {
            problem: problem.id().into(),
            algorithm: alg.id().into(),
            trial,
            iter: r.n,
            error: r.error,
            residual: r.residual,
            lambda: r.lambda,
            theta: r.theta,
            elapsed_ms: r.elapsed_ns as f64 / 1e6,
        }
    }
}

fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn run_one(
    cfg: &ExperimentConfig,
    alg: Algorithm,
    trial: usize,
    p: &ProblemInstance,
    start: &(HVec, HVec),
) -> Result<Vec<ResultRow>> {
    let mut solver = Solver::new(
        alg,
        p,
        Schedules::for_algorithm(alg),
        start.0.clone(),
        start.1.clone(),
        cfg.stop_tol,
    )?;
    let mut rows = Vec::with_capacity(cfg.max_iter);
    let mut last_ms = 0.0;
    while rows.len() < cfg.max_iter && !solver.is_stopped() {
        match solver.step() {
            Ok(rec) => {
                let row = ResultRow::from_record(cfg.problem, alg, trial, &rec);
                last_ms = row.elapsed_ms;
                rows.push(row);
            }
            Err(e) => {
                log_failure(alg, trial, &e);
                rows.push(ResultRow {
                    problem: cfg.problem.id().into(),
                    algorithm: alg.id().into(),
                    trial,
                    iter: solver.state().n,
                    error: f64::NAN,
                    residual: f64::NAN,
                    lambda: f64::NAN,
                    theta: f64::NAN,
                    elapsed_ms: last_ms,
                });
                break;
            }
        }
    }
    Ok(rows)
}

fn log_failure(alg: Algorithm, trial: usize, e: &Error) {
    eprintln!("warning: {alg} trial {trial}: {e}");
}

/// Runs every `(algorithm, trial)` pair. Rows come back ordered by the
/// algorithm's position in the config, then trial, then iteration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut setups = Vec::with_capacity(cfg.n_trials);
    for trial in 0..cfg.n_trials {
        let p = Arc::new(build_problem(cfg, trial)?);
        let start = build_initial_points(cfg, &p, trial)?;
        setups.push((p, start));
    }
    let jobs: Vec<(usize, Algorithm, usize)> = cfg
        .algorithms
        .iter()
        .enumerate()
        .flat_map(|(k, &a)| (0..cfg.n_trials).map(move |t| (k, a, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker threads: {e}")))?;
    let mut batches: Vec<(usize, usize, Vec<ResultRow>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, alg, trial)| {
                let (p, start) = &setups[trial];
                run_one(cfg, alg, trial, p, start).map(|rows| (k, trial, rows))
            })
            .collect::<Result<_>>()
    })?;
    batches.sort_by_key(|(k, trial, _)| (*k, *trial));
    Ok(batches.into_iter().flat_map(|(_, _, rows)| rows).collect())
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv_to(rows, BufWriter::new(file)).map_err(io_err)
}

/// Writes the CSV to any sink (LF line endings, 17 significant digits).
pub fn write_csv_to<W: Write>(rows: &[ResultRow], sink: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let to_io = |e: csv::Error| std::io::Error::other(e);
    w.write_record(CSV_HEADER).map_err(to_io)?;
    for r in rows {
        let error = if r.is_failure() {
            FAILED_SENTINEL.to_string()
        } else {
            fmt_float(r.error)
        };
        w.write_record([
            r.problem.clone(),
            r.algorithm.clone(),
            r.trial.to_string(),
            r.iter.to_string(),
            error,
            fmt_float(r.residual),
            fmt_float(r.lambda),
            fmt_float(r.theta),
            fmt_float(r.elapsed_ms),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file, expected a header".into())),
    };
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("bad header, expected `{}`", CSV_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != CSV_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
            ));
        }
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| parse_err(line, format!("{}: not an integer: '{}'", CSV_HEADER[i], &rec[i])))
        };
        let float = |i: usize| -> Result<f64> {
            if i == 4 && &rec[i] == FAILED_SENTINEL {
                return Ok(f64::NAN);
            }
            rec[i]
                .parse()
                .map_err(|_| parse_err(line, format!("{}: not a number: '{}'", CSV_HEADER[i], &rec[i])))
        };
        rows.push(ResultRow {
            problem: rec[0].to_string(),
            algorithm: rec[1].to_string(),
            trial: int(2)?,
            iter: int(3)?,
            error: float(4)?,
            residual: float(5)?,
            lambda: float(6)?,
            theta: float(7)?,
            elapsed_ms: float(8)?,
        });
    }
    Ok(rows)
}

/// Runs the three benchmark comparisons and writes
/// `<out_dir>/ex{1,2,3}_comparison.csv`. Returns the paths and whether any
/// run failed.
pub fn repro(out_dir: &Path, seed: u64) -> Result<(Vec<PathBuf>, bool)> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    let mut failed = false;
    for kind in ProblemKind::ALL {
        let cfg = ExperimentConfig::benchmark(kind, seed);
        let rows = run_experiment(&cfg)?;
        failed |= rows.iter().any(ResultRow::is_failure);
        let path = out_dir.join(format!("{}_comparison.csv", kind.id()));
        write_csv(&rows, &path)?;
        paths.push(path);
    }
    Ok((paths, failed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Empirical checks of the operator assumptions for one problem.
pub fn validate_problem(cfg: &ExperimentConfig, n_samples: usize) -> Result<Vec<CheckLine>> {
    let p = build_problem(cfg, 0)?;
    let mut lines = Vec::new();

    let mono = problems::check_monotone(&p, n_samples, cfg.seed)?;
    lines.push(CheckLine {
        name: "monotone",
        passed: mono.passed(),
        detail: format!("min <Ax-Ay, x-y> = {:.3e} over {} pairs", mono.min_inner, mono.samples),
    });

    let est = problems::estimate_lipschitz(&p, n_samples, cfg.seed)?;
    lines.push(CheckLine {
        name: "lipschitz",
        passed: est <= p.lipschitz * (1.0 + 1e-6),
        detail: format!("estimate {est:.6} vs claimed {:.6}", p.lipschitz),
    });

    if p.potential.is_some() {
        let g = problems::check_gradient(&p, 100, cfg.seed, 1e-5)?;
        lines.push(CheckLine {
            name: "gradient",
            passed: g.passed(),
            detail: format!("max relative error {:.3e} over {} points", g.max_rel_error, g.samples),
        });
    }

    let residual = p.fixed_point_residual()?;
    let tol = match p.grid {
        Some(g) => 10.0 * g.spacing().powi(2),
        None => 1e-8 * (1.0 + p.x_star.norm()),
    };
    lines.push(CheckLine {
        name: "solution",
        passed: residual <= tol,
        detail: format!("fixed-point residual {residual:.3e} (tolerance {tol:.3e})"),
    });
    Ok(lines)
}
