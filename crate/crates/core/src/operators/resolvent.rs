//! Closed-form resolvents J = (I + rho A)^{-1} for a small catalog of
//! maximally monotone operators A. Every entry is firmly nonexpansive:
//! projections for normal cones, proximal maps for subdifferentials.

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, Matrix, Vector};

/// The monotone operator whose resolvent is evaluated.
#[derive(Debug, Clone)]
pub enum ResolventKind {
    /// A = 0; the resolvent is the identity.
    Zero,
    /// A = normal cone of the box `[lower, upper]`; the resolvent clamps.
    Box { lower: Vector, upper: Vector },
    /// A = normal cone of `{x : M x = c}`; the resolvent is the affine projection.
    AffineSubspace { matrix: Matrix, rhs: Vector },
    /// A = normal cone of the closed ball; the resolvent is the radial projection.
    Ball { center: Vector, radius: f64 },
    /// A = gradient of q(x) = 1/2 x^T Q x + q^T x with Q symmetric PSD;
    /// the resolvent solves (I + rho Q) y = x - rho q.
    Quadratic { q: Matrix, linear: Vector },
    /// A = subdifferential of `weight * ||x||_1`; the resolvent soft-thresholds.
    L1 { weight: f64 },
}

impl ResolventKind {
    /// Ambient dimension, when the kind pins one down.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ResolventKind::Zero | ResolventKind::L1 { .. } => None,
            ResolventKind::Box { lower, .. } => Some(lower.dim()),
            ResolventKind::AffineSubspace { matrix, .. } => Some(matrix.cols()),
            ResolventKind::Ball { center, .. } => Some(center.dim()),
            ResolventKind::Quadratic { q, .. } => Some(q.cols()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventDescriptor {
    pub kind: ResolventKind,
    pub rho: f64,
}

impl ResolventDescriptor {
    pub fn new(kind: ResolventKind, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("resolvent parameter rho must be positive"));
        }
        match &kind {
            ResolventKind::Zero => {}
            ResolventKind::Box { lower, upper } => {
                if lower.dim() != upper.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.dim(),
                        got: upper.dim(),
                    });
                }
                if lower
                    .coords()
                    .iter()
                    .zip(upper.coords())
                    .any(|(l, u)| l > u)
                {
                    return Err(Error::invalid("box lower bound exceeds upper bound"));
                }
            }
            ResolventKind::AffineSubspace { matrix, rhs } => {
                if matrix.rows() != rhs.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: matrix.rows(),
                        got: rhs.dim(),
                    });
                }
                // full row rank required so the subspace is consistent and the
                // projection is well defined
                solve_linear(&matrix.outer_gram(), &Vector::zeros(matrix.rows())).map_err(
                    |_| Error::invalid("affine constraints are dependent or inconsistent"),
                )?;
            }
            ResolventKind::Ball { radius, .. } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::invalid("ball radius must be positive"));
                }
            }
            ResolventKind::Quadratic { q, linear } => {
                if !q.is_square() || q.cols() != linear.dim() {
                    return Err(Error::invalid(
                        "quadratic resolvent needs square Q matching q",
                    ));
                }
                if !q.is_symmetric(1e-12) {
                    return Err(Error::invalid("quadratic resolvent needs symmetric Q"));
                }
                let shifted = Matrix::identity(q.rows()).add(&q.scale(rho));
                solve_linear(&shifted, &Vector::zeros(q.rows()))
                    .map_err(|_| Error::invalid("I + rho Q is singular"))?;
            }
            ResolventKind::L1 { weight } => {
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::invalid("l1 weight must be nonnegative"));
                }
            }
        }
        Ok(Self { kind, rho })
    }

    pub fn identity(rho: f64) -> Self {
        Self {
            kind: ResolventKind::Zero,
            rho,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.kind.dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch {
                expected: d,
                got: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x.dim())?;
        Ok(match &self.kind {
            ResolventKind::Zero => x.clone(),
            ResolventKind::Box { lower, upper } => Vector::unchecked(
                x.coords()
                    .iter()
                    .zip(lower.coords().iter().zip(upper.coords()))
                    .map(|(v, (l, u))| v.clamp(*l, *u))
                    .collect(),
            ),
            ResolventKind::AffineSubspace { matrix, rhs } => {
                // x - M^T (M M^T)^{-1} (M x - c)
                let residual = matrix.matvec(x).sub(rhs);
                let y = solve_linear(&matrix.outer_gram(), &residual)?;
                x.sub(&matrix.transpose_matvec(&y))
            }
            ResolventKind::Ball { center, radius } => {
                let d = x.sub(center);
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center.add(&d.scale(radius / n))
                }
            }
            ResolventKind::Quadratic { q, linear } => {
                let shifted = Matrix::identity(q.rows()).add(&q.scale(self.rho));
                solve_linear(&shifted, &x.sub(&linear.scale(self.rho)))?
            }
            ResolventKind::L1 { weight } => {
                let t = self.rho * weight;
                Vector::unchecked(
                    x.coords()
                        .iter()
                        .map(|v| v.signum() * (v.abs() - t).max(0.0))
                        .collect(),
                )
            }
        })
    }
}
