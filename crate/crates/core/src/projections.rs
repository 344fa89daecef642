//! Closed-form metric projections onto the convex sets used by the solvers.

use crate::error::{Error, Result};
use crate::hilbert::HVec;

/// Normals shorter than this are treated as zero (the halfspace is then
/// the whole space).
pub const ZERO_NORMAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lo: HVec, hi: HVec },
    Ball { center: HVec, radius: f64 },
    /// `{u : <normal, u - anchor> <= 0}`.
    Halfspace { normal: HVec, anchor: HVec },
    WholeSpace,
}

impl FeasibleSet {
    pub fn boxed(lo: HVec, hi: HVec) -> Result<Self> {
        lo.check_compatible(&hi)?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo.coords()[i] > hi.coords()[i]) {
            return Err(Error::usage(format!(
                "box bound {i} has lo {} > hi {}",
                lo.coords()[i],
                hi.coords()[i]
            )));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// `[lo, hi]^d` in the space carried by `like`.
    pub fn uniform_box(like: &HVec, lo: f64, hi: f64) -> Result<Self> {
        let d = like.dim();
        Self::boxed(like.with_coords(vec![lo; d])?, like.with_coords(vec![hi; d])?)
    }

    pub fn ball(center: HVec, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::usage(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn halfspace(normal: HVec, anchor: HVec) -> Result<Self> {
        normal.check_compatible(&anchor)?;
        Ok(FeasibleSet::Halfspace { normal, anchor })
    }

    /// The halfspace `{u : <w - lambda*Aw - y, u - y> <= 0}` built from one
    /// projected gradient step `y = P_C(w - lambda*Aw)`. It contains `C`.
    pub fn halfspace_from_subgradient_step(
        w: &HVec,
        lambda: f64,
        aw: &HVec,
        y: &HVec,
    ) -> Result<Self> {
        let normal = HVec::combine(1.0, &HVec::combine(1.0, w, -lambda, aw)?, -1.0, y)?;
        Self::halfspace(normal, y.clone())
    }

    pub fn project(&self, x: &HVec) -> Result<HVec> {
        match self {
            FeasibleSet::Box { lo, hi } => {
                lo.check_compatible(x)?;
                let coords = x
                    .coords()
                    .iter()
                    .zip(lo.coords().iter().zip(hi.coords()))
                    .map(|(v, (l, h))| v.clamp(*l, *h))
                    .collect();
                x.with_coords(coords)
            }
            FeasibleSet::Ball { center, radius } => {
                let offset = x.sub(center)?;
                let dist = offset.norm();
                if dist <= *radius {
                    Ok(x.clone())
                } else {
                    HVec::combine(1.0, center, radius / dist, &offset)
                }
            }
            FeasibleSet::Halfspace { normal, anchor } => {
                let nn = normal.norm_squared();
                if nn.sqrt() < ZERO_NORMAL_TOL {
                    normal.check_compatible(x)?;
                    return Ok(x.clone());
                }
                let violation = normal.inner(&x.sub(anchor)?)?;
                if violation <= 0.0 {
                    Ok(x.clone())
                } else {
                    HVec::combine(1.0, x, -violation / nn, normal)
                }
            }
            FeasibleSet::WholeSpace => Ok(x.clone()),
        }
    }

    /// Membership up to an absolute slack `tol`.
    pub fn contains(&self, x: &HVec, tol: f64) -> Result<bool> {
        Ok(match self {
            FeasibleSet::Box { lo, hi } => {
                lo.check_compatible(x)?;
                x.coords()
                    .iter()
                    .zip(lo.coords().iter().zip(hi.coords()))
                    .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
            }
            FeasibleSet::Ball { center, radius } => x.distance(center)? <= radius + tol,
            FeasibleSet::Halfspace { normal, anchor } => {
                if normal.norm() < ZERO_NORMAL_TOL {
                    true
                } else {
                    normal.inner(&x.sub(anchor)?)? <= tol * normal.norm()
                }
            }
            FeasibleSet::WholeSpace => true,
        })
    }
}
