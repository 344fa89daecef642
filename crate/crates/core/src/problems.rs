//! Benchmark variational inequality instances and empirical checks of the
//! monotonicity and Lipschitz assumptions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{Grid, HVec};
use crate::projections::FeasibleSet;
use crate::rng;

pub trait Operator: Send + Sync + fmt::Debug {
    fn apply(&self, x: &HVec) -> Result<HVec>;
}

/// Wraps a closure as an [`Operator`]; mostly useful for fixtures.
pub struct FnOperator<F>(pub F);

impl<F> fmt::Debug for FnOperator<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnOperator")
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&HVec) -> Result<HVec> + Send + Sync,
{
    fn apply(&self, x: &HVec) -> Result<HVec> {
        (self.0)(x)
    }
}

/// Gradient of `F(x) = 1 + x1^2 - exp(-x2^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothGradient;

impl SmoothGradient {
    pub fn potential(x: &[f64]) -> f64 {
        1.0 + x[0] * x[0] - (-x[1] * x[1]).exp()
    }
}

impl Operator for SmoothGradient {
    fn apply(&self, x: &HVec) -> Result<HVec> {
        let c = x.coords();
        if c.len() != 2 {
            return Err(Error::DimensionMismatch {
                left: 2,
                right: c.len(),
            });
        }
        x.with_coords(vec![2.0 * c[0], 2.0 * c[1] * (-c[1] * c[1]).exp()])
    }
}

/// `x -> M x + q` with a dense row-major `M`.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    dim: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineOperator {
    pub fn new(dim: usize, matrix: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim || offset.len() != dim {
            return Err(Error::usage(format!(
                "affine operator of dimension {dim} needs a {dim}x{dim} matrix and length-{dim} offset"
            )));
        }
        Ok(Self {
            dim,
            matrix,
            offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn mat_t_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, vi) in self.matrix.chunks_exact(self.dim).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        out
    }
}

impl Operator for AffineOperator {
    fn apply(&self, x: &HVec) -> Result<HVec> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.dim(),
            });
        }
        let mut y = self.mat_vec(x.coords());
        for (yi, qi) in y.iter_mut().zip(&self.offset) {
            *yi += qi;
        }
        x.with_coords(y)
    }
}

/// Spectral norm of a square row-major matrix by power iteration on
/// `M^T M`: at most 200 sweeps, or until the Rayleigh value changes by less
/// than `1e-12` relative.
pub fn spectral_norm(op: &AffineOperator) -> f64 {
    let d = op.dim;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut value = 0.0;
    for _ in 0..200 {
        let w = op.mat_t_vec(&op.mat_vec(&v));
        let next = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if next == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|c| c / next).collect();
        let converged = (next - value).abs() <= 1e-12 * next;
        value = next;
        if converged {
            break;
        }
    }
    value.sqrt()
}

/// Discretized Hammerstein-type integral operator on `L^2[0,1]`:
///
/// `(Ax)(t) = x(t) - int_0^1 G(t,s) cos(x(s)) ds + h(t)` with
/// `G(t,s) = c t e^t s e^s`, `h(t) = c t e^t`, `c = 2 / (e sqrt(e^2 - 1))`.
///
/// `G` is rank one, so the quadrature sum collapses to a single weighted dot
/// product and each application is `O(n)`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    grid: Grid,
    weights: Vec<f64>,
    profile: Vec<f64>,
    scale: f64,
}

impl KernelOperator {
    pub fn new(grid: Grid) -> Self {
        let e = std::f64::consts::E;
        let scale = 2.0 / (e * (e * e - 1.0).sqrt());
        let profile = grid.nodes().into_iter().map(|t| t * t.exp()).collect();
        Self {
            grid,
            weights: grid.trapezoid_weights(),
            profile,
            scale,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.scale * self.profile[i] * self.profile[j]
    }

    pub fn forcing(&self, i: usize) -> f64 {
        self.scale * self.profile[i]
    }
}

impl Operator for KernelOperator {
    fn apply(&self, x: &HVec) -> Result<HVec> {
        if x.dim() != self.grid.n_points() {
            return Err(Error::DimensionMismatch {
                left: self.grid.n_points(),
                right: x.dim(),
            });
        }
        let integral: f64 = self
            .weights
            .iter()
            .zip(&self.profile)
            .zip(x.coords())
            .map(|((w, a), xj)| w * a * xj.cos())
            .sum();
        let coords = x
            .coords()
            .iter()
            .zip(&self.profile)
            .map(|(xi, a)| xi + self.scale * a * (1.0 - integral))
            .collect();
        x.with_coords(coords)
    }
}

/// A variational inequality `find x* in C with <A x*, x - x*> >= 0` together
/// with its known solution.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub operator: Arc<dyn Operator>,
    pub set: FeasibleSet,
    pub x_star: HVec,
    /// Lipschitz constant asserted for the operator.
    pub lipschitz: f64,
    pub seed: Option<u64>,
    pub grid: Option<Grid>,
    /// Scalar potential whose gradient is the operator, when one exists.
    pub potential: Option<fn(&[f64]) -> f64>,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.x_star.dim()
    }

    pub fn apply(&self, x: &HVec) -> Result<HVec> {
        let y = self.operator.apply(x)?;
        x.check_compatible(&y)?;
        Ok(y)
    }

    /// `||x* - P_C(x* - A x*)||`, zero exactly at solutions.
    pub fn fixed_point_residual(&self) -> Result<f64> {
        let ax = self.apply(&self.x_star)?;
        let step = self.x_star.sub(&ax)?;
        self.x_star.distance(&self.set.project(&step)?)
    }

    /// Coordinate bounds of the region validators sample from: the feasible
    /// set inflated by a factor of two about its center.
    pub fn sampling_bounds(&self) -> Vec<(f64, f64)> {
        match &self.set {
            FeasibleSet::Box { lo, hi } => lo
                .coords()
                .iter()
                .zip(hi.coords())
                .map(|(l, h)| {
                    let (mid, half) = (0.5 * (l + h), 0.5 * (h - l));
                    (mid - 2.0 * half, mid + 2.0 * half)
                })
                .collect(),
            FeasibleSet::Ball { center, radius } => center
                .coords()
                .iter()
                .map(|c| (c - 2.0 * radius, c + 2.0 * radius))
                .collect(),
            FeasibleSet::Halfspace { .. } | FeasibleSet::WholeSpace => self
                .x_star
                .coords()
                .iter()
                .map(|c| (c - 10.0, c + 10.0))
                .collect(),
        }
    }

    fn sample_point(&self, bounds: &[(f64, f64)], rng: &mut impl rand::RngCore) -> Result<HVec> {
        let coords = bounds
            .iter()
            .map(|(l, h)| rng::uniform(rng, *l, *h))
            .collect();
        self.x_star.with_coords(coords)
    }
}

/// `min_x F(x) = 1 + x1^2 - exp(-x2^2)` over `[-5, 5]^2` as a VI on the gradient.
pub fn make_example1() -> ProblemInstance {
    let x_star = HVec::euclidean(vec![0.0, 0.0]).expect("static vector");
    let set = FeasibleSet::uniform_box(&x_star, -5.0, 5.0).expect("static box");
    ProblemInstance {
        name: "ex1".into(),
        operator: Arc::new(SmoothGradient),
        set,
        x_star,
        lipschitz: 2.0,
        seed: None,
        grid: None,
        potential: Some(SmoothGradient::potential),
    }
}

/// Random affine instance `A x = (N N^T + U + D) x` on `[-2, 5]^m`.
///
/// Draw order from the problem stream: `N` row-major, then the diagonal of
/// `D`, then the strict upper triangle of `U` row-major.
pub fn make_example2(m: usize, seed: u64) -> Result<ProblemInstance> {
    if m < 1 {
        return Err(Error::usage("example 2 dimension must be at least 1"));
    }
    let op = example2_operator(m, seed);
    let lipschitz = spectral_norm(&op);
    let x_star = HVec::euclidean(vec![0.0; m])?;
    let set = FeasibleSet::uniform_box(&x_star, -2.0, 5.0)?;
    Ok(ProblemInstance {
        name: "ex2".into(),
        operator: Arc::new(op),
        set,
        x_star,
        lipschitz,
        seed: Some(seed),
        grid: None,
        potential: None,
    })
}

/// The matrix parts `(N, D diagonal, U)` behind [`make_example2`].
pub fn example2_factors(m: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = rng::stream(seed, rng::STREAM_PROBLEM);
    let n: Vec<f64> = (0..m * m).map(|_| rng::uniform(&mut rng, 0.0, 2.0)).collect();
    let d: Vec<f64> = (0..m).map(|_| rng::uniform(&mut rng, 0.0, 2.0)).collect();
    let mut u = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let v = rng::uniform(&mut rng, -2.0, 2.0);
            u[i * m + j] = v;
            u[j * m + i] = -v;
        }
    }
    (n, d, u)
}

fn example2_operator(m: usize, seed: u64) -> AffineOperator {
    let (n, d, u) = example2_factors(m, seed);
    let mut matrix = u;
    for i in 0..m {
        for j in 0..m {
            let nnt: f64 = (0..m).map(|k| n[i * m + k] * n[j * m + k]).sum();
            matrix[i * m + j] += nnt;
        }
        matrix[i * m + i] += d[i];
    }
    AffineOperator::new(m, matrix, vec![0.0; m]).expect("dimensions match by construction")
}

/// Integral-operator instance on the unit ball of `L^2[0,1]`.
pub fn make_example3(grid: Grid) -> ProblemInstance {
    let op = KernelOperator::new(grid);
    let x_star = HVec::sample(&grid, |_| 0.0).expect("grid is valid");
    let set = FeasibleSet::ball(x_star.clone(), 1.0).expect("unit radius");
    ProblemInstance {
        name: "ex3".into(),
        operator: Arc::new(op),
        set,
        x_star,
        lipschitz: 2.0,
        seed: None,
        grid: Some(grid),
        potential: None,
    }
}

#[derive(Debug, Clone)]
pub struct MonotoneReport {
    pub samples: usize,
    /// Smallest observed `<Ax - Ay, x - y>`.
    pub min_inner: f64,
    /// The pair attaining `min_inner`.
    pub witness: Option<(HVec, HVec)>,
}

impl MonotoneReport {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn passed(&self) -> bool {
        self.min_inner >= -Self::TOLERANCE
    }
}

pub fn check_monotone(p: &ProblemInstance, n_samples: usize, seed: u64) -> Result<MonotoneReport> {
    if n_samples < 1 {
        return Err(Error::usage("n_samples must be at least 1"));
    }
    let bounds = p.sampling_bounds();
    let mut rng = rng::stream(seed, rng::STREAM_VALIDATION);
    let mut report = MonotoneReport {
        samples: n_samples,
        min_inner: f64::INFINITY,
        witness: None,
    };
    for _ in 0..n_samples {
        let x = p.sample_point(&bounds, &mut rng)?;
        let y = p.sample_point(&bounds, &mut rng)?;
        let v = p.apply(&x)?.sub(&p.apply(&y)?)?.inner(&x.sub(&y)?)?;
        if v < report.min_inner {
            report.min_inner = v;
            report.witness = Some((x, y));
        }
    }
    Ok(report)
}

/// Largest observed `||Ax - Ay|| / ||x - y||`, a lower bound on the true
/// Lipschitz constant.
///
/// Even-numbered samples draw independent pairs over the sampling region;
/// odd ones pair a point with a short step in a random direction, which
/// probes the local derivative.
pub fn estimate_lipschitz(p: &ProblemInstance, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 1 {
        return Err(Error::usage("n_samples must be at least 1"));
    }
    let bounds = p.sampling_bounds();
    let width = bounds.iter().map(|(l, h)| h - l).fold(0.0, f64::max);
    let step = 1e-4 * width.max(1.0);
    let mut rng = rng::stream(seed, rng::STREAM_VALIDATION);
    let mut best = 0.0f64;
    for k in 0..n_samples {
        let x = p.sample_point(&bounds, &mut rng)?;
        let y = if k % 2 == 0 {
            p.sample_point(&bounds, &mut rng)?
        } else {
            let dir: Vec<f64> = (0..x.dim()).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
            let dir = x.with_coords(dir)?;
            let len = dir.norm();
            if len == 0.0 {
                continue;
            }
            HVec::combine(1.0, &x, step / len, &dir)?
        };
        let dx = x.distance(&y)?;
        if dx == 0.0 {
            continue;
        }
        let da = p.apply(&x)?.distance(&p.apply(&y)?)?;
        best = best.max(da / dx);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
pub struct GradientReport {
    pub samples: usize,
    /// `max ||fd - A x|| / max(||A x||, 1)` over the samples.
    pub max_rel_error: f64,
}

impl GradientReport {
    pub const TOLERANCE: f64 = 1e-6;

    pub fn passed(&self) -> bool {
        self.max_rel_error <= Self::TOLERANCE
    }
}

/// Compares the operator with central differences of the problem's potential.
pub fn check_gradient(
    p: &ProblemInstance,
    n_samples: usize,
    seed: u64,
    step: f64,
) -> Result<GradientReport> {
    let f = p
        .potential
        .ok_or_else(|| Error::usage(format!("problem {} has no potential", p.name)))?;
    if n_samples < 1 || step.is_nan() || step <= 0.0 {
        return Err(Error::usage("need n_samples >= 1 and a positive step"));
    }
    let bounds = p.sampling_bounds();
    let mut rng = rng::stream(seed, rng::STREAM_VALIDATION);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let x = p.sample_point(&bounds, &mut rng)?;
        let mut probe = x.coords().to_vec();
        let mut fd = Vec::with_capacity(x.dim());
        for i in 0..x.dim() {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            fd.push((up - down) / (2.0 * step));
        }
        let ax = p.apply(&x)?;
        let err = x.with_coords(fd)?.distance(&ax)?;
        worst = worst.max(err / ax.norm().max(1.0));
    }
    Ok(GradientReport {
        samples: n_samples,
        max_rel_error: worst,
    })
}
