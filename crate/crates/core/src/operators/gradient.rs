//! Closed-form gradient families, one component per scenario.

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue_symmetric, Matrix, Vector};

/// One least-squares component f(x) = 1/2 ||A x - b||^2.
#[derive(Debug, Clone)]
pub struct LeastSquaresTerm {
    pub matrix: Matrix,
    pub offset: Vector,
}

impl LeastSquaresTerm {
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        if matrix.rows() != offset.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                got: offset.dim(),
            });
        }
        Ok(Self { matrix, offset })
    }

    fn gradient(&self, x: &Vector) -> Vector {
        // A^T (A x - b)
        let r = self.matrix.matvec(x).sub(&self.offset);
        self.matrix.transpose_matvec(&r)
    }

    fn curvature(&self) -> f64 {
        max_eigenvalue_symmetric(&self.matrix.gram()).max(0.0)
    }
}

/// One labelled sample for the logistic loss f(x) = ln(1 + exp(-y <a, x>)).
#[derive(Debug, Clone)]
pub struct LogisticSample {
    pub features: Vector,
    pub label: f64,
}

impl LogisticSample {
    pub fn new(features: Vector, label: f64) -> Result<Self> {
        if label != 1.0 && label != -1.0 {
            return Err(Error::invalid("logistic labels must be +1 or -1"));
        }
        Ok(Self { features, label })
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let margin = self.label * self.features.dot(x);
        // sigmoid(-margin), computed stably for large |margin|
        let sig = if margin >= 0.0 {
            let e = (-margin).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + margin.exp())
        };
        self.features.scale(-self.label * sig)
    }

    fn curvature(&self) -> f64 {
        self.features.norm_sq() / 4.0
    }
}

/// A finite family of convex smooth components with closed-form gradients.
#[derive(Debug, Clone)]
pub enum GradientFamily {
    LeastSquares(Vec<LeastSquaresTerm>),
    Logistic(Vec<LogisticSample>),
}

impl GradientFamily {
    pub fn components(&self) -> usize {
        match self {
            GradientFamily::LeastSquares(terms) => terms.len(),
            GradientFamily::Logistic(samples) => samples.len(),
        }
    }

    pub fn input_dim(&self) -> Option<usize> {
        match self {
            GradientFamily::LeastSquares(terms) => terms.first().map(|t| t.matrix.cols()),
            GradientFamily::Logistic(samples) => samples.first().map(|s| s.features.dim()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.components() == 0 {
            return Err(Error::invalid(
                "gradient family must have at least one component",
            ));
        }
        let ok = match self {
            GradientFamily::LeastSquares(terms) => terms.iter().all(|t| t.matrix.cols() == dim),
            GradientFamily::Logistic(samples) => samples.iter().all(|s| s.features.dim() == dim),
        };
        if !ok {
            return Err(Error::invalid(
                "gradient family component dimension mismatch",
            ));
        }
        Ok(())
    }

    pub fn gradient(&self, component: usize, x: &Vector) -> Vector {
        match self {
            GradientFamily::LeastSquares(terms) => terms[component].gradient(x),
            GradientFamily::Logistic(samples) => samples[component].gradient(x),
        }
    }

    /// Probability-weighted gradient of the expected objective.
    pub fn expected_gradient(&self, probs: &[f64], x: &Vector) -> Vector {
        assert_eq!(probs.len(), self.components());
        let mut acc = Vector::zeros(x.dim());
        for (i, p) in probs.iter().enumerate() {
            acc = acc.add(&self.gradient(i, x).scale(*p));
        }
        acc
    }

    /// Largest curvature over the components; a Lipschitz constant for every
    /// component gradient.
    pub fn max_curvature(&self) -> f64 {
        match self {
            GradientFamily::LeastSquares(terms) => {
                terms.iter().map(|t| t.curvature()).fold(0.0, f64::max)
            }
            GradientFamily::Logistic(samples) => {
                samples.iter().map(|s| s.curvature()).fold(0.0, f64::max)
            }
        }
    }

    /// Scalar components f_i(x) = 1/2 (x - a_i)^2 in one dimension.
    pub fn scalar_targets(targets: &[f64]) -> Result<Self> {
        let terms = targets
            .iter()
            .map(|a| LeastSquaresTerm::new(Matrix::identity(1), Vector::from_slice(&[*a])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(GradientFamily::LeastSquares(terms))
    }
}
