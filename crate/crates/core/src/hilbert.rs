//! Weighted inner-product arithmetic.
//!
//! One vector type covers both `R^m` (all weights 1) and the trapezoidal
//! discretization of `L^2[0,1]`. The inner product is
//! `<x, y> = sum_i w_i x_i y_i`, so a diagonal weight vector is all that
//! distinguishes the two spaces.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform partition of `[0, 1]` including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n_points: usize,
}

impl Grid {
    pub const DEFAULT_POINTS: usize = 101;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::usage(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_points - 1) as f64
    }

    /// Node `i` is computed as `i / (n - 1)` so the last node is exactly 1.
    pub fn nodes(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| i as f64 / last).collect()
    }

    /// Composite trapezoidal weights: `h/2` at the endpoints, `h` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }
}

/// A point of the (discretized) Hilbert space.
///
/// Weights are shared behind an `Arc` so iterates derived from the same
/// space do not copy them.
#[derive(Debug, Clone)]
pub struct HVec {
    coords: Vec<f64>,
    weights: Arc<[f64]>,
}

impl PartialEq for HVec {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.same_weights(other)
    }
}

impl HVec {
    /// A vector of `R^m` with unit weights.
    pub fn euclidean(coords: Vec<f64>) -> Result<Self> {
        let weights: Arc<[f64]> = vec![1.0; coords.len()].into();
        Self::new(coords, weights)
    }

    pub fn new(coords: Vec<f64>, weights: impl Into<Arc<[f64]>>) -> Result<Self> {
        let weights = weights.into();
        if coords.is_empty() {
            return Err(Error::usage("vector dimension must be at least 1"));
        }
        if coords.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                left: coords.len(),
                right: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::usage(format!(
                "quadrature weights must be positive and finite, found {w}"
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector construction",
            });
        }
        Ok(Self { coords, weights })
    }

    /// Samples `f` at the grid nodes, carrying trapezoidal weights.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let coords = grid.nodes().into_iter().map(f).collect();
        Self::new(coords, grid.trapezoid_weights())
    }

    /// A vector sharing this one's weights with new coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector construction",
            });
        }
        Ok(Self {
            coords,
            weights: Arc::clone(&self.weights),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            coords: vec![0.0; self.dim()],
            weights: Arc::clone(&self.weights),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    fn same_weights(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.weights, &other.weights) || self.weights == other.weights
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if !self.same_weights(other) {
            return Err(Error::WeightMismatch);
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .weights
            .iter()
            .zip(self.coords.iter().zip(&other.coords))
            .map(|(w, (a, b))| w * (a * b))
            .sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.coords)
            .map(|(w, c)| w * c * c)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `a * x + b * y`, failing if any coordinate overflows.
    pub fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Result<Self> {
        x.check_compatible(y)?;
        let coords: Vec<f64> = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(xi, yi)| a * xi + b * yi)
            .collect();
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "linear combination",
            });
        }
        Ok(Self {
            coords,
            weights: Arc::clone(&x.weights),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::combine(1.0, self, -1.0, other)
    }

    pub fn scale(&self, a: f64) -> Result<Self> {
        let coords: Vec<f64> = self.coords.iter().map(|c| a * c).collect();
        self.with_coords(coords)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}
