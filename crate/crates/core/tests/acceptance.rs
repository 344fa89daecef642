//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use vi_extragrad::harness::{build_initial_points, build_problem, ExperimentConfig, ProblemKind};
use vi_extragrad::hilbert::{Grid, HVec};
use vi_extragrad::problems::{make_example1, make_example3, ProblemInstance};
use vi_extragrad::projections::FeasibleSet;
use vi_extragrad::solvers::{run, Algorithm, IterationTrace, Schedules, Solver, StopReason};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEEDS: std::ops::Range<u64> = 0..10;

fn setup(kind: ProblemKind, seed: u64) -> (ProblemInstance, HVec) {
    let cfg = ExperimentConfig::benchmark(kind, seed);
    let p = build_problem(&cfg, 0).expect("problem");
    let (x0, _) = build_initial_points(&cfg, &p, 0).expect("start");
    (p, x0)
}

fn bench(alg: Algorithm, p: &ProblemInstance, x0: &HVec, max_iter: usize) -> (IterationTrace, Duration) {
    let t0 = Instant::now();
    let t = run(alg, p, &Schedules::for_algorithm(alg), x0.clone(), x0.clone(), max_iter, None)
        .unwrap_or_else(|e| panic!("{alg} on {}: {e}", p.name));
    (t, t0.elapsed())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_instances() -> Vec<(ProblemKind, u64)> {
    let mut v: Vec<_> = SEEDS.map(|s| (ProblemKind::Ex1, s)).collect();
    v.extend(SEEDS.map(|s| (ProblemKind::Ex2, s)));
    v.push((ProblemKind::Ex3, 0));
    v
}

fn step_size_law() -> Outcome {
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    for (kind, seed) in all_instances() {
        let (p, x0) = setup(kind, seed);
        for alg in [Algorithm::Misegm, Algorithm::Mitegm, Algorithm::Tvegm] {
            let (t, dt) = bench(alg, &p, &x0, kind.default_max_iter());
            let s = Schedules::for_algorithm(alg);
            let floor = s.lambda1.min(s.mu / p.lipschitz) - 1e-12;
            ensure(t.records.windows(2).all(|w| w[1].lambda <= w[0].lambda), || {
                format!("{alg} {kind} seed {seed}: lambda increased")
            })?;
            let min = t.records.iter().map(|r| r.lambda).fold(f64::INFINITY, f64::min);
            ensure(min >= floor, || format!("{alg} {kind} seed {seed}: min lambda {min} < {floor}"))?;
            ensure(dt < Duration::from_secs(1), || format!("{alg} {kind}: run took {dt:?}"))?;
            slowest = slowest.max(dt);
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, slowest {slowest:?}"))
}

fn inertia_law() -> Outcome {
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for (kind, seed) in all_instances() {
        let (p, x0) = setup(kind, seed);
        for alg in [Algorithm::Misegm, Algorithm::Mitegm] {
            let mut solver = Solver::new(alg, &p, Schedules::default(), x0.clone(), x0.clone(), None).unwrap();
            for _ in 0..kind.default_max_iter() {
                let gap = solver.state().x_curr.distance(&solver.state().x_prev).unwrap();
                let r = solver.step().unwrap();
                let eps = 100.0 / ((r.n + 1) as f64).powi(2);
                let lhs = r.theta * gap;
                ensure(lhs <= eps, || format!("{alg} {kind} seed {seed} n={}: {lhs} > {eps}", r.n))?;
                tightest = tightest.min(eps - lhs);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} iterations, smallest margin {tightest:.3e}"))
}

/// Re-derives `w, y, z` from the state before each step and checks the
/// descent inequalities against `p = x*`.
fn lemma_inequalities() -> Outcome {
    let (mut applied, mut total) = (0usize, 0usize);
    for kind in [ProblemKind::Ex1, ProblemKind::Ex2] {
        for seed in SEEDS {
            let (p, x0) = setup(kind, seed);
            for alg in [Algorithm::Misegm, Algorithm::Mitegm] {
                let s = Schedules::default();
                let mut solver = Solver::new(alg, &p, s.clone(), x0.clone(), x0.clone(), None).unwrap();
                let mut armed = false;
                for _ in 0..200 {
                    let (x, xp, lambda) = {
                        let st = solver.state();
                        (st.x_curr.clone(), st.x_prev.clone(), st.lambda)
                    };
                    let r = solver.step().unwrap();
                    let lambda_next = r.diagnostics.lambda_next;
                    let w = HVec::combine(1.0, &x, r.theta, &x.sub(&xp).unwrap()).unwrap();
                    let aw = p.apply(&w).unwrap();
                    let y = p.set.project(&HVec::combine(1.0, &w, -lambda, &aw).unwrap()).unwrap();
                    let ay = p.apply(&y).unwrap();
                    let z = match alg {
                        Algorithm::Misegm => {
                            let t = FeasibleSet::halfspace_from_subgradient_step(&w, lambda, &aw, &y).unwrap();
                            t.project(&HVec::combine(1.0, &w, -lambda, &ay).unwrap()).unwrap()
                        }
                        _ => HVec::combine(1.0, &y, -lambda, &ay.sub(&aw).unwrap()).unwrap(),
                    };
                    let alpha = 1.0 / (r.n as f64 + 1.0);
                    let beta = 0.5 * (1.0 - alpha);
                    let x_next = HVec::combine(1.0 - alpha - beta, &w, beta, &z).unwrap();
                    ensure(x_next.distance(&solver.state().x_curr).unwrap() <= 1e-12 * (1.0 + x_next.norm()), || {
                        format!("{alg} {kind} seed {seed} n={}: update mismatch", r.n)
                    })?;

                    let ratio = lambda / lambda_next;
                    armed |= 1.0 - s.mu * ratio > 0.0;
                    total += 1;
                    if !armed {
                        continue;
                    }
                    applied += 1;
                    let wp = w.distance(&p.x_star).unwrap().powi(2);
                    let zp = z.distance(&p.x_star).unwrap().powi(2);
                    let wy = w.distance(&y).unwrap();
                    let zy = z.distance(&y).unwrap();
                    let tol = 1e-9 * (1.0 + wp);
                    let ok = match alg {
                        Algorithm::Misegm => zp <= wp - (1.0 - s.mu * ratio) * (wy * wy + zy * zy) + tol,
                        _ => {
                            zp <= wp - (1.0 - s.mu * s.mu * ratio * ratio) * wy * wy + tol
                                && zy <= s.mu * ratio * wy + 1e-9 * (1.0 + wy)
                        }
                    };
                    ensure(ok, || format!("{alg} {kind} seed {seed} n={}: inequality violated", r.n))?;
                }
            }
        }
    }
    ensure(applied > 0, || "no iteration was past the arming index".into())?;
    Ok(format!("{applied} of {total} iterations checked"))
}

fn stop_at_solution() -> Outcome {
    let mut lines = Vec::new();
    for kind in ProblemKind::ALL {
        let (p, _) = setup(kind, 0);
        let tol = match p.grid {
            Some(g) => 10.0 * g.spacing().powi(2),
            None => 1e-10,
        };
        for alg in Algorithm::ALL {
            let t = run(alg, &p, &Schedules::for_algorithm(alg), p.x_star.clone(), p.x_star.clone(), 200, Some(tol)).unwrap();
            ensure(t.records.len() == 1 && t.stop == StopReason::Residual, || {
                format!("{alg} {kind}: {} iterations, stop {:?}", t.records.len(), t.stop)
            })?;
            ensure(t.records[0].residual <= tol, || format!("{alg} {kind}: residual {}", t.records[0].residual))?;
        }
        lines.push(format!("{kind} tol {tol:.0e}"));
    }
    Ok(format!("7 algorithms halt at n=1 ({})", lines.join(", ")))
}

fn first_below(t: &IterationTrace, level: f64) -> Option<usize> {
    t.records.iter().find(|r| r.error <= level).map(|r| r.n)
}

fn convergence_example1() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for seed in SEEDS {
        let (p, x0) = setup(ProblemKind::Ex1, seed);
        for c in x0.coords() {
            ensure((0.0..=1.0).contains(c), || format!("start {c} outside [0,1]"))?;
        }
        for alg in [Algorithm::Misegm, Algorithm::Mitegm] {
            let (t, _) = bench(alg, &p, &x0, 200);
            ensure(first_below(&t, 1e-4).is_some(), || format!("{alg} seed {seed}: never below 1e-4"))?;
            let d200 = t.records[199].error;
            ensure(d200 <= 1e-6, || format!("{alg} seed {seed}: D_200 = {d200:e}"))?;
            worst = worst.max(d200);
        }
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(1), || format!("took {dt:?}"))?;
    Ok(format!("worst D_200 {worst:.2e}, total {dt:?}"))
}

fn convergence_example2() -> Outcome {
    let mut hits = [0usize; 2];
    for seed in SEEDS {
        let (p, x0) = setup(ProblemKind::Ex2, seed);
        for alg in Algorithm::ALL {
            let (t, _) = bench(alg, &p, &x0, 200);
            let (d1, d200) = (t.records[0].error, t.records[199].error);
            ensure(d200 < d1, || format!("{alg} seed {seed}: D_200 {d200} >= D_1 {d1}"))?;
            if let Some(k) = [Algorithm::Misegm, Algorithm::Mitegm].iter().position(|a| *a == alg) {
                if first_below(&t, 1e-2 * d1).is_some() {
                    hits[k] += 1;
                }
            }
        }
    }
    ensure(hits.iter().all(|&h| h >= 9), || format!("seeds reaching 1e-2 D_1: {hits:?}"))?;
    Ok(format!("all seven decrease; misegm {}/10, mitegm {}/10 reach 1e-2 D_1", hits[0], hits[1]))
}

fn convergence_example3() -> Outcome {
    let (p, x0) = setup(ProblemKind::Ex3, 0);
    ensure(p.lipschitz == 2.0, || "claimed L should be 2".into())?;
    let mut detail = Vec::new();
    for alg in Algorithm::ALL {
        let (t, _) = bench(alg, &p, &x0, 50);
        ensure(t.records.len() == 50, || format!("{alg}: {} iterations", t.records.len()))?;
        let (d1, d50) = (t.records[0].error, t.records[49].error);
        ensure(d50 < d1, || format!("{alg}: D_50 {d50} >= D_1 {d1}"))?;
        if alg.is_self_adaptive() {
            let s = Schedules::for_algorithm(alg);
            let floor = s.lambda1.min(s.mu / 2.0) - 1e-12;
            ensure(t.records.iter().all(|r| r.lambda >= floor), || format!("{alg}: lambda below {floor}"))?;
        }
        detail.push(format!("{alg} {d50:.1e}"));
    }
    Ok(format!("D_50: {}", detail.join(", ")))
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2]) as f64
    }
}

fn inertia_ablation() -> Outcome {
    let hit = |alg: Algorithm| -> Vec<usize> {
        SEEDS
            .map(|seed| {
                let (p, x0) = setup(ProblemKind::Ex1, seed);
                first_below(&bench(alg, &p, &x0, 200).0, 1e-3).unwrap_or(201)
            })
            .collect()
    };
    let mut out = Vec::new();
    for (inertial, plain) in [(Algorithm::Misegm, Algorithm::Masegm), (Algorithm::Mitegm, Algorithm::Mategm)] {
        let (a, b) = (median(hit(inertial)), median(hit(plain)));
        ensure(a < b, || format!("{inertial} median {a} not below {plain} median {b}"))?;
        out.push(format!("{inertial} {a} < {plain} {b}"));
    }
    Ok(format!("median first n with D_n < 1e-3: {}", out.join("; ")))
}

fn gradient_oracle() -> Outcome {
    let p = make_example1();
    let f = |x: [f64; 2]| 1.0 + x[0] * x[0] - (-x[1] * x[1]).exp();
    let h = 1e-5;
    let mut rng = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        use rand::Rng;
        let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let fd = [
            (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h),
            (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h),
        ];
        let a = p.apply(&HVec::euclidean(x.to_vec()).unwrap()).unwrap();
        let err = ((fd[0] - a.coords()[0]).powi(2) + (fd[1] - a.coords()[1]).powi(2)).sqrt();
        worst = worst.max(err / a.norm().max(1.0));
    }
    ensure(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e} over 100 points"))
}

fn analytic_zero() -> Outcome {
    let mut norms = Vec::new();
    for n in [11, 101, 1001] {
        let grid = Grid::new(n).unwrap();
        let p = make_example3(grid);
        let v = p.apply(&p.x_star).unwrap().norm();
        let bound = 10.0 * grid.spacing().powi(2);
        ensure(v <= bound, || format!("n={n}: ||A(0)|| = {v:e} > {bound:e}"))?;
        norms.push(v);
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(ratios.iter().all(|r| (50.0..=200.0).contains(r)), || format!("ratios {ratios:?}"))?;
    Ok(format!("||A(0)|| = {:.2e}, {:.2e}, {:.2e}; ratios {:.1}, {:.1}", norms[0], norms[1], norms[2], ratios[0], ratios[1]))
}

fn projection_suite() -> Outcome {
    let mut rng = rng(77);
    use rand::Rng;
    for kind in SET_KINDS {
        for i in 0..10_000 {
            let d = rng.random_range(1..8);
            let w = random_weights(&mut rng, d);
            let set = random_set(&mut rng, kind, &w);
            let x = random_vec(&mut rng, &w, 10.0);
            let y = random_vec(&mut rng, &w, 10.0);
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            let idem = set.project(&px).unwrap().distance(&px).unwrap();
            ensure(idem <= 1e-12 * (1.0 + px.norm()), || format!("{kind:?} #{i}: idempotence off by {idem:e}"))?;
            let member = random_member(&mut rng, &set, &w);
            let var = x.sub(&px).unwrap().inner(&member.sub(&px).unwrap()).unwrap();
            ensure(var <= 1e-10, || format!("{kind:?} #{i}: variational {var:e}"))?;
            let dp = px.sub(&py).unwrap();
            let firm = dp.norm_squared() - dp.inner(&x.sub(&y).unwrap()).unwrap();
            ensure(firm <= 1e-10, || format!("{kind:?} #{i}: firm nonexpansiveness {firm:e}"))?;
        }
    }
    let res = 1e-3;
    let mut worst = 0.0f64;
    for kind in SET_KINDS {
        for i in 0..10 {
            let w = vec![1.0, 1.0];
            let set = random_set(&mut rng, kind, &w);
            let x = random_vec(&mut rng, &w, 6.0);
            let exact = x.distance(&set.project(&x).unwrap()).unwrap();
            let brute = grid_search_distance(&set, &x, search_window(&set, &x), res);
            ensure(exact <= brute + 1e-12 && brute - exact <= res * 2f64.sqrt(), || {
                format!("{kind:?} #{i}: projection distance {exact} vs grid {brute}")
            })?;
            worst = worst.max(brute - exact);
        }
    }
    Ok(format!("3 x 10^4 random instances; grid-search gap at most {worst:.2e}"))
}

fn repro_csv(dir: &Path) -> Vec<String> {
    let status = Command::new(env!("CARGO_BIN_EXE_vi-extragrad"))
        .args(["repro", "--seed", "42", "--out-dir"])
        .arg(dir)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("spawn repro");
    assert!(status.success(), "repro exited with {status}");
    ["ex1", "ex2", "ex3"]
        .iter()
        .map(|name| {
            let text = std::fs::read_to_string(dir.join(format!("{name}_comparison.csv"))).unwrap();
            text.lines()
                .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect()
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (repro_csv(a.path()), repro_csv(b.path()));
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        ensure(x == y, || format!("ex{} CSVs differ outside elapsed_ms", i + 1))?;
    }
    let lines: usize = ra.iter().map(|s| s.lines().count()).sum();
    Ok(format!("two repro runs identical over {lines} lines"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("step-size law", step_size_law),
        ("inertia law", inertia_law),
        ("descent inequalities", lemma_inequalities),
        ("stop at solution", stop_at_solution),
        ("convergence ex1", convergence_example1),
        ("convergence ex2", convergence_example2),
        ("convergence ex3", convergence_example3),
        ("inertia ablation", inertia_ablation),
        ("gradient oracle ex1", gradient_oracle),
        ("analytic zero ex3", analytic_zero),
        ("projection suite", projection_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS [A{:02}] {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [A{:02}] {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
