#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vi_extragrad::hilbert::HVec;
use vi_extragrad::projections::FeasibleSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Box,
    Ball,
    Halfspace,
}

pub const SET_KINDS: [SetKind; 3] = [SetKind::Box, SetKind::Ball, SetKind::Halfspace];

/// Random weights: unit (R^d) half the time, positive quadrature-like otherwise.
pub fn random_weights(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    if rng.random_bool(0.5) {
        vec![1.0; d]
    } else {
        (0..d).map(|_| rng.random_range(0.05..2.0)).collect()
    }
}

pub fn random_vec(rng: &mut ChaCha8Rng, w: &[f64], scale: f64) -> HVec {
    let c = (0..w.len()).map(|_| rng.random_range(-scale..scale)).collect();
    HVec::new(c, w.to_vec()).unwrap()
}

pub fn random_set(rng: &mut ChaCha8Rng, kind: SetKind, w: &[f64]) -> FeasibleSet {
    let d = w.len();
    match kind {
        SetKind::Box => {
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            FeasibleSet::boxed(
                HVec::new(lo, w.to_vec()).unwrap(),
                HVec::new(hi, w.to_vec()).unwrap(),
            )
            .unwrap()
        }
        SetKind::Ball => {
            FeasibleSet::ball(random_vec(rng, w, 3.0), rng.random_range(0.1..4.0)).unwrap()
        }
        SetKind::Halfspace => {
            FeasibleSet::halfspace(random_vec(rng, w, 2.0), random_vec(rng, w, 3.0)).unwrap()
        }
    }
}

/// A point of the set built without calling `project`: boxes and balls are
/// sampled directly, halfspace violators are reflected across the boundary.
pub fn random_member(rng: &mut ChaCha8Rng, set: &FeasibleSet, w: &[f64]) -> HVec {
    match set {
        FeasibleSet::Box { lo, hi } => {
            let c = lo
                .coords()
                .iter()
                .zip(hi.coords())
                .map(|(l, h)| if l == h { *l } else { rng.random_range(*l..=*h) })
                .collect();
            HVec::new(c, w.to_vec()).unwrap()
        }
        FeasibleSet::Ball { center, radius } => {
            let dir = random_vec(rng, w, 1.0);
            let n = dir.norm().max(1e-300);
            let r = radius * rng.random_range(0.0..0.999);
            HVec::combine(1.0, center, r / n, &dir).unwrap()
        }
        FeasibleSet::Halfspace { normal, anchor } => {
            let z = random_vec(rng, w, 8.0);
            let s = normal.inner(&z.sub(anchor).unwrap()).unwrap();
            if s <= 0.0 {
                z
            } else {
                HVec::combine(1.0, &z, -2.0 * s / normal.norm_squared(), normal).unwrap()
            }
        }
        FeasibleSet::WholeSpace => random_vec(rng, w, 8.0),
    }
}

/// Planar membership test written out from each set's definition.
fn planar_member(set: &FeasibleSet) -> impl Fn([f64; 2]) -> bool + '_ {
    move |p: [f64; 2]| match set {
        FeasibleSet::Box { lo, hi } => (0..2).all(|i| p[i] >= lo.coords()[i] && p[i] <= hi.coords()[i]),
        FeasibleSet::Ball { center, radius } => {
            let c = center.coords();
            (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= radius * radius
        }
        FeasibleSet::Halfspace { normal, anchor } => {
            let (a, q) = (normal.coords(), anchor.coords());
            a[0] * (p[0] - q[0]) + a[1] * (p[1] - q[1]) <= 0.0
        }
        FeasibleSet::WholeSpace => true,
    }
}

/// Smallest distance from `x` to the set over a planar grid: a coarse sweep
/// of `window` at step `10 * res`, then a sweep at step `res` around the
/// coarse winner.
///
/// Along a boundary the distance grows like `t^2 / (2 d)` in the tangential
/// offset `t`, so the coarse winner can be up to `sqrt(2 d * step * sqrt 2)`
/// away from the minimizer; the refine window covers that.
pub fn grid_search_distance(set: &FeasibleSet, x: &HVec, window: [(f64, f64); 2], res: f64) -> f64 {
    let member = planar_member(set);
    let xc = [x.coords()[0], x.coords()[1]];
    let sweep = |win: [(f64, f64); 2], step: f64| -> Option<(f64, [f64; 2])> {
        let nx = ((win[0].1 - win[0].0) / step).ceil() as usize;
        let ny = ((win[1].1 - win[1].0) / step).ceil() as usize;
        let mut best: Option<(f64, [f64; 2])> = None;
        for i in 0..=nx {
            for j in 0..=ny {
                let p = [win[0].0 + i as f64 * step, win[1].0 + j as f64 * step];
                if member(p) {
                    let d = ((p[0] - xc[0]).powi(2) + (p[1] - xc[1]).powi(2)).sqrt();
                    if best.is_none_or(|(b, _)| d < b) {
                        best = Some((d, p));
                    }
                }
            }
        }
        best
    };
    let coarse = 10.0 * res;
    let (dc, c) = sweep(window, coarse).expect("window intersects the set");
    let half = 2.0 * coarse + (2.0 * dc * coarse * std::f64::consts::SQRT_2).sqrt();
    let fine = [(c[0] - half, c[0] + half), (c[1] - half, c[1] + half)];
    sweep(fine, res).expect("refined window intersects the set").0
}

/// Search window guaranteed to contain the nearest point of the set.
pub fn search_window(set: &FeasibleSet, x: &HVec) -> [(f64, f64); 2] {
    let c = x.coords();
    let radius = match set {
        FeasibleSet::Box { lo, hi } => {
            return [
                (lo.coords()[0], hi.coords()[0]),
                (lo.coords()[1], hi.coords()[1]),
            ]
        }
        FeasibleSet::Ball { center, radius } => {
            return [
                (center.coords()[0] - radius, center.coords()[0] + radius),
                (center.coords()[1] - radius, center.coords()[1] + radius),
            ]
        }
        FeasibleSet::Halfspace { anchor, .. } => x.distance(anchor).unwrap(),
        FeasibleSet::WholeSpace => 0.0,
    };
    [(c[0] - radius, c[0] + radius), (c[1] - radius, c[1] + radius)]
}
