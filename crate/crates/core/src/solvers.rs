//! Extragradient solvers as single-step state machines.
//!
//! Two inertial Mann-type schemes with a self-adaptive step size are the
//! main methods:
//!
//! * [`Algorithm::Misegm`]: inertial subgradient extragradient. The second
//!   projection is onto the halfspace `T_n` built from the first step.
//! * [`Algorithm::Mitegm`]: inertial Tseng extragradient. The second
//!   projection is replaced by the correction `z = y - lambda (Ay - Aw)`.
//!
//! Both take `w_n = x_n + theta_n (x_n - x_{n-1})`, update
//! `x_{n+1} = (1 - alpha_n - beta_n) w_n + beta_n z_n` and shrink the step
//! with `lambda_{n+1} = min(mu ||w - y|| / ||Aw - Ay||, lambda_n)`.
//!
//! The baselines are the Halpern subgradient scheme with a fixed step
//! ([`Algorithm::Hsegm`]), the viscosity subgradient scheme with an Armijo
//! search ([`Algorithm::Vsegm`]), the viscosity Tseng scheme
//! ([`Algorithm::Tvegm`]) and the two Mann-type schemes without inertia
//! ([`Algorithm::Masegm`], [`Algorithm::Mategm`]).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::hilbert::HVec;
use crate::problems::ProblemInstance;
use crate::projections::FeasibleSet;

/// Norms at or below this count as zero in the inertia and step-size
/// branch tests.
pub const ZERO_TOL: f64 = 1e-14;

/// Default residual stop for library use.
pub const DEFAULT_STOP_TOL: f64 = 1e-12;

/// Slack used by the per-iteration descent inequality checks, scaled by
/// `1 + ||w - p||^2`.
pub const INEQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Misegm,
    Mitegm,
    Hsegm,
    Vsegm,
    Tvegm,
    Masegm,
    Mategm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Misegm,
        Algorithm::Mitegm,
        Algorithm::Hsegm,
        Algorithm::Vsegm,
        Algorithm::Tvegm,
        Algorithm::Masegm,
        Algorithm::Mategm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Misegm => "misegm",
            Algorithm::Mitegm => "mitegm",
            Algorithm::Hsegm => "hsegm",
            Algorithm::Vsegm => "vsegm",
            Algorithm::Tvegm => "tvegm",
            Algorithm::Masegm => "masegm",
            Algorithm::Mategm => "mategm",
        }
    }

    /// Uses the `min(mu ||.|| / ||.||, lambda_n)` step-size rule.
    pub fn is_self_adaptive(self) -> bool {
        matches!(
            self,
            Algorithm::Misegm
                | Algorithm::Mitegm
                | Algorithm::Tvegm
                | Algorithm::Masegm
                | Algorithm::Mategm
        )
    }

    /// Projections per non-terminal iteration, Armijo trials excluded.
    pub fn projections_per_step(self) -> u32 {
        match self {
            Algorithm::Misegm | Algorithm::Masegm | Algorithm::Hsegm | Algorithm::Vsegm => 2,
            Algorithm::Mitegm | Algorithm::Mategm | Algorithm::Tvegm => 1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::usage(format!(
                    "unknown algorithm '{s}', expected one of misegm, mitegm, hsegm, vsegm, tvegm, masegm, mategm"
                ))
            })
    }
}

/// `scale / (n + shift)^power`, or a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sequence {
    Constant(f64),
    Reciprocal { scale: f64, shift: f64, power: i32 },
}

impl Sequence {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Sequence::Constant(c) => c,
            Sequence::Reciprocal {
                scale,
                shift,
                power,
            } => scale / (n as f64 + shift).powi(power),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    Constant(f64),
    /// `c * (1 - alpha_n)`.
    ComplementFraction(f64),
}

impl BetaRule {
    pub fn at(&self, alpha: f64) -> f64 {
        match *self {
            BetaRule::Constant(b) => b,
            BetaRule::ComplementFraction(c) => c * (1.0 - alpha),
        }
    }
}

/// Parameters of every scheme. Each algorithm reads only the fields it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedules {
    /// Inertia cap `theta`.
    pub theta: f64,
    /// Initial step for the self-adaptive schemes.
    pub lambda1: f64,
    pub mu: f64,
    pub alpha: Sequence,
    pub beta: BetaRule,
    pub eps: Sequence,
    /// Viscosity map `f(x) = contraction * x`.
    pub contraction: f64,
    pub armijo_ell: f64,
    pub armijo_max_m: u32,
    /// Fixed step of the Halpern scheme is `fixed_step_factor / L`.
    pub fixed_step_factor: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            theta: 0.4,
            lambda1: 1.0,
            mu: 0.5,
            alpha: Sequence::Reciprocal {
                scale: 1.0,
                shift: 1.0,
                power: 1,
            },
            beta: BetaRule::ComplementFraction(0.5),
            eps: Sequence::Reciprocal {
                scale: 100.0,
                shift: 1.0,
                power: 2,
            },
            contraction: 0.9,
            armijo_ell: 0.5,
            armijo_max_m: 60,
            fixed_step_factor: 0.99,
        }
    }
}

impl Schedules {
    /// Benchmark settings for one algorithm; the Armijo scheme uses `mu = 0.4`.
    pub fn for_algorithm(alg: Algorithm) -> Self {
        let mut s = Self::default();
        if alg == Algorithm::Vsegm {
            s.mu = 0.4;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.theta >= 0.0 && self.theta.is_finite(), "theta must be >= 0"),
            (self.lambda1 > 0.0 && self.lambda1.is_finite(), "lambda1 must be > 0"),
            (self.mu > 0.0 && self.mu < 1.0, "mu must lie in (0, 1)"),
            (
                (0.0..1.0).contains(&self.contraction),
                "contraction must lie in [0, 1)",
            ),
            (
                self.armijo_ell > 0.0 && self.armijo_ell < 1.0,
                "armijo_ell must lie in (0, 1)",
            ),
            (
                self.fixed_step_factor > 0.0 && self.fixed_step_factor.is_finite(),
                "fixed_step_factor must be > 0",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::usage(*msg)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `||w_n - y_n||` fell to the stopping tolerance; `y_n` solves the VI.
    Residual,
    MaxIter,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub algorithm: Algorithm,
    pub n: usize,
    pub x_curr: HVec,
    pub x_prev: HVec,
    pub lambda: f64,
    /// Halpern anchor `x_0`.
    pub anchor: HVec,
    pub last_theta: f64,
    /// `None` disables the residual stop.
    pub stop_tol: Option<f64>,
    pub stopped: Option<StopReason>,
    /// Set once `1 - mu lambda_n / lambda_{n+1} > 0` has been observed.
    pub inequalities_armed: bool,
    /// Solution reported by a residual stop.
    pub solution: Option<HVec>,
}

impl SolverState {
    pub fn new(
        algorithm: Algorithm,
        p: &ProblemInstance,
        s: &Schedules,
        x0: HVec,
        x1: HVec,
        stop_tol: Option<f64>,
    ) -> Result<Self> {
        s.validate()?;
        p.x_star.check_compatible(&x0)?;
        p.x_star.check_compatible(&x1)?;
        if let Some(t) = stop_tol {
            if t.is_nan() || t < 0.0 {
                return Err(Error::usage(format!("stop tolerance must be >= 0, got {t}")));
            }
        }
        let lambda = match algorithm {
            Algorithm::Hsegm => {
                if !(p.lipschitz > 0.0 && p.lipschitz.is_finite()) {
                    return Err(Error::usage(
                        "the fixed-step scheme needs a positive Lipschitz constant",
                    ));
                }
                s.fixed_step_factor / p.lipschitz
            }
            _ => s.lambda1,
        };
        Ok(Self {
            algorithm,
            n: 1,
            anchor: x0.clone(),
            x_prev: x0,
            x_curr: x1,
            lambda,
            last_theta: 0.0,
            stop_tol,
            stopped: None,
            inequalities_armed: false,
            solution: None,
        })
    }
}

/// `lhs <= rhs`, where `rhs` already includes the numerical slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Whether the check counts: only from the first index where
    /// `1 - mu lambda_n / lambda_{n+1} > 0` onward.
    pub applied: bool,
}

impl InequalityCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    pub lambda_next: f64,
    pub eps: f64,
    /// `theta_n ||x_n - x_{n-1}||`.
    pub inertial_step: f64,
    pub operator_evals: u32,
    pub projections: u32,
    /// Rejected Armijo trial steps.
    pub armijo_rejections: u32,
    pub y_feasible: bool,
    pub z_in_halfspace: Option<bool>,
    /// `||z - p||^2` descent bound against `p = x*`.
    pub descent: Option<InequalityCheck>,
    /// `||z - y|| <= mu (lambda_n / lambda_{n+1}) ||w - y||` (Tseng family).
    pub correction: Option<InequalityCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    /// `||x_n - x*||`.
    pub error: f64,
    pub lambda: f64,
    pub theta: f64,
    /// `||w_n - y_n||`.
    pub residual: f64,
    /// Cumulative solver wall time, filled in by [`Solver::step`].
    pub elapsed_ns: u64,
    pub diagnostics: StepDiagnostics,
}

/// `theta_n = min(eps_n / ||x_n - x_{n-1}||, theta)`, or `theta` when the
/// iterates coincide.
pub fn inertia_theta(x_curr: &HVec, x_prev: &HVec, eps_n: f64, theta_cap: f64) -> Result<f64> {
    let gap = x_curr.distance(x_prev)?;
    Ok(if gap <= ZERO_TOL {
        theta_cap
    } else {
        let mut theta = (eps_n / gap).min(theta_cap);
        // keep theta * gap <= eps_n after rounding
        while theta > 0.0 && theta * gap > eps_n {
            theta = theta.next_down();
        }
        theta
    })
}

/// `lambda_{n+1} = min(mu ||w - y|| / ||Aw - Ay||, lambda_n)`, or `lambda_n`
/// when `Aw = Ay`.
pub fn step_size_update(
    lambda_n: f64,
    mu: f64,
    w: &HVec,
    y: &HVec,
    aw: &HVec,
    ay: &HVec,
) -> Result<f64> {
    let den = aw.distance(ay)?;
    Ok(if den <= ZERO_TOL {
        lambda_n
    } else {
        (mu * w.distance(y)? / den).min(lambda_n)
    })
}

#[derive(Default)]
struct Tally {
    evals: u32,
    projections: u32,
}

impl Tally {
    fn apply(&mut self, p: &ProblemInstance, x: &HVec) -> Result<HVec> {
        self.evals += 1;
        p.apply(x)
    }

    fn project(&mut self, set: &FeasibleSet, x: &HVec) -> Result<HVec> {
        self.projections += 1;
        set.project(x)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Correction {
    Subgradient,
    Tseng,
}

fn feasibility_tol(x: &HVec) -> f64 {
    1e-10 * (1.0 + x.norm())
}

fn should_stop(state: &SolverState, residual: f64) -> bool {
    state.stop_tol.is_some_and(|t| residual <= t)
}

fn stopped_record(
    state: &mut SolverState,
    base: IterationRecord,
    y: HVec,
    tally: &Tally,
) -> IterationRecord {
    state.stopped = Some(StopReason::Residual);
    state.solution = Some(y);
    IterationRecord {
        diagnostics: StepDiagnostics {
            lambda_next: base.lambda,
            operator_evals: tally.evals,
            projections: tally.projections,
            ..base.diagnostics
        },
        ..base
    }
}

fn mann_step(
    state: &mut SolverState,
    p: &ProblemInstance,
    s: &Schedules,
    correction: Correction,
    inertial: bool,
) -> Result<IterationRecord> {
    let n = state.n;
    let alpha = s.alpha.at(n);
    let beta = s.beta.at(alpha);
    let eps = s.eps.at(n);
    let lambda = state.lambda;
    let mut tally = Tally::default();

    let theta = if inertial {
        inertia_theta(&state.x_curr, &state.x_prev, eps, s.theta)?
    } else {
        0.0
    };
    let momentum = state.x_curr.sub(&state.x_prev)?;
    let gap = momentum.norm();
    let w = HVec::combine(1.0, &state.x_curr, theta, &momentum)?;
    let aw = tally.apply(p, &w)?;
    let y = tally.project(&p.set, &HVec::combine(1.0, &w, -lambda, &aw)?)?;
    let residual = w.distance(&y)?;

    let mut record = IterationRecord {
        n,
        error: state.x_curr.distance(&p.x_star)?,
        lambda,
        theta,
        residual,
        elapsed_ns: 0,
        diagnostics: StepDiagnostics {
            eps,
            inertial_step: theta * gap,
            y_feasible: p.set.contains(&y, feasibility_tol(&y))?,
            ..Default::default()
        },
    };
    state.last_theta = theta;
    if should_stop(state, residual) {
        return Ok(stopped_record(state, record, y, &tally));
    }

    let ay = tally.apply(p, &y)?;
    let z = match correction {
        Correction::Subgradient => {
            let half = FeasibleSet::halfspace_from_subgradient_step(&w, lambda, &aw, &y)?;
            let z = tally.project(&half, &HVec::combine(1.0, &w, -lambda, &ay)?)?;
            record.diagnostics.z_in_halfspace = Some(half.contains(&z, feasibility_tol(&z))?);
            z
        }
        Correction::Tseng => HVec::combine(1.0, &y, -lambda, &ay.sub(&aw)?)?,
    };
    let x_next = HVec::combine(1.0 - alpha - beta, &w, beta, &z)?;
    let lambda_next = step_size_update(lambda, s.mu, &w, &y, &aw, &ay)?;

    let ratio = lambda / lambda_next;
    if 1.0 - s.mu * ratio > 0.0 {
        state.inequalities_armed = true;
    }
    let applied = state.inequalities_armed;
    let w_p = w.distance(&p.x_star)?.powi(2);
    let z_p = z.distance(&p.x_star)?.powi(2);
    let w_y = w.distance(&y)?;
    let z_y = z.distance(&y)?;
    let slack = INEQUALITY_TOL * (1.0 + w_p);
    let d = &mut record.diagnostics;
    match correction {
        Correction::Subgradient => {
            let factor = 1.0 - s.mu * ratio;
            d.descent = Some(InequalityCheck {
                lhs: z_p,
                rhs: w_p - factor * (w_y * w_y + z_y * z_y) + slack,
                applied,
            });
        }
        Correction::Tseng => {
            let factor = 1.0 - s.mu * s.mu * ratio * ratio;
            d.descent = Some(InequalityCheck {
                lhs: z_p,
                rhs: w_p - factor * w_y * w_y + slack,
                applied,
            });
            d.correction = Some(InequalityCheck {
                lhs: z_y,
                rhs: s.mu * ratio * w_y + INEQUALITY_TOL * (1.0 + w_y),
                applied,
            });
        }
    }
    d.lambda_next = lambda_next;
    d.operator_evals = tally.evals;
    d.projections = tally.projections;

    state.x_prev = std::mem::replace(&mut state.x_curr, x_next);
    state.lambda = lambda_next;
    state.n += 1;
    Ok(record)
}

/// Mann-type inertial subgradient extragradient step.
pub fn misegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    mann_step(state, p, s, Correction::Subgradient, true)
}

/// Mann-type inertial Tseng extragradient step.
pub fn mitegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    mann_step(state, p, s, Correction::Tseng, true)
}

/// [`misegm_step`] with the inertial extrapolation switched off.
pub fn masegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    mann_step(state, p, s, Correction::Subgradient, false)
}

/// [`mitegm_step`] with the inertial extrapolation switched off.
pub fn mategm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    mann_step(state, p, s, Correction::Tseng, false)
}

fn baseline_record(
    state: &SolverState,
    p: &ProblemInstance,
    lambda: f64,
    residual: f64,
    y: &HVec,
) -> Result<IterationRecord> {
    Ok(IterationRecord {
        n: state.n,
        error: state.x_curr.distance(&p.x_star)?,
        lambda,
        theta: 0.0,
        residual,
        elapsed_ns: 0,
        diagnostics: StepDiagnostics {
            y_feasible: p.set.contains(y, feasibility_tol(y))?,
            ..Default::default()
        },
    })
}

/// Halpern subgradient extragradient step with the fixed step `0.99 / L`:
/// `x_{n+1} = alpha_n x_0 + (1 - alpha_n) P_{T_n}(x_n - lambda A y_n)`.
pub fn hsegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    let alpha = s.alpha.at(state.n);
    let lambda = state.lambda;
    let mut tally = Tally::default();
    let x = &state.x_curr;
    let ax = tally.apply(p, x)?;
    let y = tally.project(&p.set, &HVec::combine(1.0, x, -lambda, &ax)?)?;
    let residual = x.distance(&y)?;
    let mut record = baseline_record(state, p, lambda, residual, &y)?;
    if should_stop(state, residual) {
        return Ok(stopped_record(state, record, y, &tally));
    }
    let ay = tally.apply(p, &y)?;
    let half = FeasibleSet::halfspace_from_subgradient_step(x, lambda, &ax, &y)?;
    let z = tally.project(&half, &HVec::combine(1.0, x, -lambda, &ay)?)?;
    let x_next = HVec::combine(alpha, &state.anchor, 1.0 - alpha, &z)?;

    let d = &mut record.diagnostics;
    d.z_in_halfspace = Some(half.contains(&z, feasibility_tol(&z))?);
    d.lambda_next = lambda;
    d.operator_evals = tally.evals;
    d.projections = tally.projections;
    state.x_prev = std::mem::replace(&mut state.x_curr, x_next);
    state.n += 1;
    Ok(record)
}

/// Viscosity subgradient extragradient step with an Armijo search.
///
/// The trial steps `ell^m`, `m = 0, 1, ...` restart from `m = 0` every
/// iteration; the first `lambda` with
/// `lambda ||Ax - Ay(lambda)|| <= mu ||x - y(lambda)||` is taken.
pub fn vsegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    let alpha = s.alpha.at(state.n);
    let mut tally = Tally::default();
    let x = &state.x_curr;
    let ax = tally.apply(p, x)?;

    let mut accepted = None;
    let mut lambda = 1.0;
    for m in 0..=s.armijo_max_m {
        lambda = s.armijo_ell.powi(m as i32);
        let y = tally.project(&p.set, &HVec::combine(1.0, x, -lambda, &ax)?)?;
        let ay = tally.apply(p, &y)?;
        if lambda * ax.distance(&ay)? <= s.mu * x.distance(&y)? {
            accepted = Some((m, y, ay));
            break;
        }
    }
    let Some((m, y, ay)) = accepted else {
        return Err(Error::SolverFailure {
            iteration: state.n,
            message: format!(
                "Armijo search exhausted {} trials (smallest step {lambda:e}); operator may not be Lipschitz",
                s.armijo_max_m + 1
            ),
        });
    };

    let residual = x.distance(&y)?;
    let mut record = baseline_record(state, p, lambda, residual, &y)?;
    record.diagnostics.armijo_rejections = m;
    if should_stop(state, residual) {
        state.lambda = lambda;
        return Ok(stopped_record(state, record, y, &tally));
    }
    let half = FeasibleSet::halfspace_from_subgradient_step(x, lambda, &ax, &y)?;
    let z = tally.project(&half, &HVec::combine(1.0, x, -lambda, &ay)?)?;
    let x_next = HVec::combine(alpha * s.contraction, x, 1.0 - alpha, &z)?;

    let d = &mut record.diagnostics;
    d.z_in_halfspace = Some(half.contains(&z, feasibility_tol(&z))?);
    d.lambda_next = lambda;
    d.operator_evals = tally.evals;
    d.projections = tally.projections;
    state.lambda = lambda;
    state.x_prev = std::mem::replace(&mut state.x_curr, x_next);
    state.n += 1;
    Ok(record)
}

/// Viscosity Tseng extragradient step with the self-adaptive step size
/// evaluated on `(x_n, y_n)`.
pub fn tvegm_step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    let alpha = s.alpha.at(state.n);
    let lambda = state.lambda;
    let mut tally = Tally::default();
    let x = &state.x_curr;
    let ax = tally.apply(p, x)?;
    let y = tally.project(&p.set, &HVec::combine(1.0, x, -lambda, &ax)?)?;
    let residual = x.distance(&y)?;
    let mut record = baseline_record(state, p, lambda, residual, &y)?;
    if should_stop(state, residual) {
        return Ok(stopped_record(state, record, y, &tally));
    }
    let ay = tally.apply(p, &y)?;
    let z = HVec::combine(1.0, &y, -lambda, &ay.sub(&ax)?)?;
    let x_next = HVec::combine(alpha * s.contraction, x, 1.0 - alpha, &z)?;
    let lambda_next = step_size_update(lambda, s.mu, x, &y, &ax, &ay)?;

    let d = &mut record.diagnostics;
    d.lambda_next = lambda_next;
    d.operator_evals = tally.evals;
    d.projections = tally.projections;
    state.lambda = lambda_next;
    state.x_prev = std::mem::replace(&mut state.x_curr, x_next);
    state.n += 1;
    Ok(record)
}

/// Advances `state` by one iteration of its algorithm. Any failure is
/// reported as [`Error::SolverFailure`] tagged with the iteration index.
pub fn step(state: &mut SolverState, p: &ProblemInstance, s: &Schedules) -> Result<IterationRecord> {
    if state.stopped.is_some() {
        return Err(Error::usage("solver has already stopped"));
    }
    let n = state.n;
    let out = match state.algorithm {
        Algorithm::Misegm => misegm_step(state, p, s),
        Algorithm::Mitegm => mitegm_step(state, p, s),
        Algorithm::Hsegm => hsegm_step(state, p, s),
        Algorithm::Vsegm => vsegm_step(state, p, s),
        Algorithm::Tvegm => tvegm_step(state, p, s),
        Algorithm::Masegm => masegm_step(state, p, s),
        Algorithm::Mategm => mategm_step(state, p, s),
    };
    out.map_err(|e| match e {
        e @ Error::SolverFailure { .. } => e,
        other => Error::SolverFailure {
            iteration: n,
            message: other.to_string(),
        },
    })
}

/// Drives one run, timing each step.
#[derive(Debug)]
pub struct Solver<'a> {
    problem: &'a ProblemInstance,
    schedules: Schedules,
    state: SolverState,
    elapsed_ns: u64,
}

impl<'a> Solver<'a> {
    pub fn new(
        algorithm: Algorithm,
        problem: &'a ProblemInstance,
        schedules: Schedules,
        x0: HVec,
        x1: HVec,
        stop_tol: Option<f64>,
    ) -> Result<Self> {
        let state = SolverState::new(algorithm, problem, &schedules, x0, x1, stop_tol)?;
        Ok(Self {
            problem,
            schedules,
            state,
            elapsed_ns: 0,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn is_stopped(&self) -> bool {
        self.state.stopped.is_some()
    }

    pub fn step(&mut self) -> Result<IterationRecord> {
        let start = Instant::now();
        let mut record = step(&mut self.state, self.problem, &self.schedules)?;
        self.elapsed_ns += start.elapsed().as_nanos() as u64;
        record.elapsed_ns = self.elapsed_ns;
        Ok(record)
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// The last iterate, or the certified solution on a residual stop.
    pub final_point: HVec,
}

/// Runs `algorithm` from `(x0, x1)` for at most `max_iter` iterations.
pub fn run(
    algorithm: Algorithm,
    p: &ProblemInstance,
    s: &Schedules,
    x0: HVec,
    x1: HVec,
    max_iter: usize,
    stop_tol: Option<f64>,
) -> Result<IterationTrace> {
    if max_iter < 1 {
        return Err(Error::usage("max_iter must be at least 1"));
    }
    let mut solver = Solver::new(algorithm, p, s.clone(), x0, x1, stop_tol)?;
    let mut records = Vec::with_capacity(max_iter);
    while records.len() < max_iter && !solver.is_stopped() {
        records.push(solver.step()?);
    }
    let state = solver.state;
    let stop = state.stopped.unwrap_or(StopReason::MaxIter);
    Ok(IterationTrace {
        algorithm,
        records,
        stop,
        final_point: state.solution.unwrap_or(state.x_curr),
    })
}
