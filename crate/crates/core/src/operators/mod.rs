//! Stochastic nonexpansive operators over finite scenario sets.
//!
//! A `StochasticOperator` is a family `{T_i}` indexed by a finite scenario
//! set with probabilities. The expected operator `T x = sum_i p_i T_i x` is
//! evaluated by full enumeration, never by sampling, so residuals and
//! variances are exact up to floating point. Nonexpansiveness is not assumed
//! at construction; `check_nonexpansive` tests it on random pairs and
//! reports violations.

mod gradient;
mod resolvent;

pub use gradient::{GradientFamily, LeastSquaresTerm, LogisticSample};
pub use resolvent::{ResolventDescriptor, ResolventKind};

use crate::error::{Error, Result};
use crate::linalg::{linear_combination, Matrix, Vector};
use crate::report::InequalityReport;
use crate::rng::{inverse_cdf, sample_vector, stream_rng, Stream};

/// A finite probability distribution over scenario indices.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    probs: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("scenario set must be nonempty"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("scenario probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "scenario probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("scenario set must be nonempty"));
        }
        Ok(Self {
            probs: vec![1.0 / m as f64; m],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Inverse-CDF draw: first index whose cumulative weight exceeds `u`.
    pub fn sample(&self, u: f64) -> usize {
        inverse_cdf(&self.probs, u)
    }
}

/// A scenario-dependent affine map x -> M x + b.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        if matrix.rows() != offset.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                got: offset.dim(),
            });
        }
        Ok(Self { matrix, offset })
    }

    fn apply(&self, x: &Vector) -> Vector {
        self.matrix.matvec(x).add(&self.offset)
    }
}

/// Evaluation rule of a stochastic operator, built from composable blocks.
/// Per-scenario lists must have exactly one entry per scenario.
#[derive(Debug, Clone)]
pub enum OperatorRule {
    Identity,
    /// x -> x - gamma * grad f_i(x)
    GradientStep {
        gamma: f64,
        family: GradientFamily,
    },
    /// Scenario-independent resolvent evaluation.
    Resolvent(ResolventDescriptor),
    /// x -> M_i x + b_i
    Affine(Vec<AffineMap>),
    /// x -> x + b_i
    Translation(Vec<Vector>),
    /// (1 - weight) * left + weight * right, scenario-wise.
    ConvexCombination {
        weight: f64,
        left: Box<OperatorRule>,
        right: Box<OperatorRule>,
    },
    /// outer(inner(x)), scenario-wise.
    Composition {
        outer: Box<OperatorRule>,
        inner: Box<OperatorRule>,
    },
    /// The three-operator composite
    /// x -> x - Ja(x) + Jb(2 Ja(x) - x - rho * C_i(Ja(x))).
    DavisYin {
        rho: f64,
        a: ResolventDescriptor,
        b: ResolventDescriptor,
        c: GradientFamily,
    },
}

impl OperatorRule {
    fn validate(&self, dim: usize, scenarios: usize) -> Result<()> {
        match self {
            OperatorRule::Identity => Ok(()),
            OperatorRule::GradientStep { gamma, family } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::invalid("gradient step size must be positive"));
                }
                family.validate(dim)?;
                if family.components() != scenarios {
                    return Err(Error::invalid(
                        "gradient family must have one component per scenario",
                    ));
                }
                Ok(())
            }
            OperatorRule::Resolvent(r) => r.check_dim(dim),
            OperatorRule::Affine(maps) => {
                if maps.len() != scenarios {
                    return Err(Error::invalid("need one affine map per scenario"));
                }
                for m in maps {
                    if m.matrix.rows() != dim || m.matrix.cols() != dim {
                        return Err(Error::invalid(
                            "affine maps must be square in the ambient dimension",
                        ));
                    }
                }
                Ok(())
            }
            OperatorRule::Translation(offsets) => {
                if offsets.len() != scenarios {
                    return Err(Error::invalid("need one translation offset per scenario"));
                }
                if offsets.iter().any(|b| b.dim() != dim) {
                    return Err(Error::invalid(
                        "translation offsets must match the ambient dimension",
                    ));
                }
                Ok(())
            }
            OperatorRule::ConvexCombination {
                weight,
                left,
                right,
            } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::invalid(
                        "convex combination weight must lie in [0, 1]",
                    ));
                }
                left.validate(dim, scenarios)?;
                right.validate(dim, scenarios)
            }
            OperatorRule::Composition { outer, inner } => {
                outer.validate(dim, scenarios)?;
                inner.validate(dim, scenarios)
            }
            OperatorRule::DavisYin { rho, a, b, c } => {
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(Error::invalid("composite step rho must be positive"));
                }
                if a.rho != *rho || b.rho != *rho {
                    return Err(Error::invalid(
                        "resolvent parameters must match the composite rho",
                    ));
                }
                a.check_dim(dim)?;
                b.check_dim(dim)?;
                c.validate(dim)?;
                if c.components() != scenarios {
                    return Err(Error::invalid(
                        "gradient family must have one component per scenario",
                    ));
                }
                Ok(())
            }
        }
    }

    fn eval(&self, scenario: usize, x: &Vector) -> Result<Vector> {
        Ok(match self {
            OperatorRule::Identity => x.clone(),
            OperatorRule::GradientStep { gamma, family } => {
                x.sub(&family.gradient(scenario, x).scale(*gamma))
            }
            OperatorRule::Resolvent(r) => r.apply(x)?,
            OperatorRule::Affine(maps) => maps[scenario].apply(x),
            OperatorRule::Translation(offsets) => x.add(&offsets[scenario]),
            OperatorRule::ConvexCombination {
                weight,
                left,
                right,
            } => linear_combination(
                1.0 - weight,
                &left.eval(scenario, x)?,
                *weight,
                &right.eval(scenario, x)?,
            ),
            OperatorRule::Composition { outer, inner } => {
                outer.eval(scenario, &inner.eval(scenario, x)?)?
            }
            OperatorRule::DavisYin { rho, a, b, c } => {
                let y = a.apply(x)?;
                let inner = y
                    .scale(2.0)
                    .sub(x)
                    .sub(&c.gradient(scenario, &y).scale(*rho));
                let z = b.apply(&inner)?;
                x.sub(&y).add(&z)
            }
        })
    }
}

/// A family of operators over a finite scenario distribution, with exact
/// expected-operator evaluation.
#[derive(Debug, Clone)]
pub struct StochasticOperator {
    dim: usize,
    scenarios: ScenarioSet,
    rule: OperatorRule,
}

impl StochasticOperator {
    pub fn new(dim: usize, scenarios: ScenarioSet, rule: OperatorRule) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        rule.validate(dim, scenarios.len())?;
        Ok(Self {
            dim,
            scenarios,
            rule,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn rule(&self) -> &OperatorRule {
        &self.rule
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// T_i x for one scenario.
    pub fn apply(&self, scenario: usize, x: &Vector) -> Result<Vector> {
        if scenario >= self.scenarios.len() {
            return Err(Error::ScenarioOutOfRange {
                index: scenario,
                count: self.scenarios.len(),
            });
        }
        self.check_input(x)?;
        self.rule.eval(scenario, x)
    }

    /// T x = sum_i p_i T_i x, by full enumeration of the scenario set.
    pub fn expected_apply(&self, x: &Vector) -> Result<Vector> {
        self.check_input(x)?;
        let mut acc = Vector::zeros(self.dim);
        for i in 0..self.scenarios.len() {
            let ti = self.rule.eval(i, x)?;
            acc = acc.add(&ti.scale(self.scenarios.prob(i)));
        }
        Ok(acc)
    }

    /// ||T x - x||.
    pub fn residual(&self, x: &Vector) -> Result<f64> {
        Ok(self.expected_apply(x)?.distance(x))
    }

    /// sum_i p_i ||T_i x - T x||^2, exact over the scenario set.
    pub fn variance_at(&self, x: &Vector) -> Result<f64> {
        self.check_input(x)?;
        let mean = self.expected_apply(x)?;
        let mut acc = 0.0;
        for i in 0..self.scenarios.len() {
            let ti = self.rule.eval(i, x)?;
            acc += self.scenarios.prob(i) * ti.distance_sq(&mean);
        }
        Ok(acc)
    }

    /// Draw a scenario index from `u ~ U[0,1)`.
    pub fn sample_scenario(&self, u: f64) -> usize {
        self.scenarios.sample(u)
    }

    /// Test `||T_i x - T_i y|| <= ||x - y||` on `trials` random pairs and all
    /// scenarios. Margins are `||x - y|| - ||T_i x - T_i y||`.
    pub fn check_nonexpansive(&self, rng_seed: u64, trials: usize) -> Result<InequalityReport> {
        if trials == 0 {
            return Err(Error::invalid(
                "nonexpansiveness check needs at least one trial",
            ));
        }
        let mut rng = stream_rng(rng_seed, Stream::Probe);
        let mut margins = Vec::with_capacity(trials * self.scenarios.len());
        for _ in 0..trials {
            let x = sample_vector(&mut rng, self.dim, 5.0);
            let y = sample_vector(&mut rng, self.dim, 5.0);
            let base = x.distance(&y);
            for i in 0..self.scenarios.len() {
                let tx = self.rule.eval(i, &x)?;
                let ty = self.rule.eval(i, &y)?;
                margins.push(base - tx.distance(&ty));
            }
        }
        Ok(InequalityReport::from_margins(
            "nonexpansive",
            margins,
            1e-9,
        ))
    }
}
