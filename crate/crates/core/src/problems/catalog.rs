//! Built-in problem instances addressable by name from the CLI and the
//! verification suites. Every entry carries its induced operator, a default
//! start point, and a solved `KnownSolution`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operators::{
    AffineMap, GradientFamily, LeastSquaresTerm, OperatorRule, ResolventKind, ScenarioSet,
    StochasticOperator,
};
use crate::rng::{stream_rng, Stream};

use super::{KnownSolution, SgdProblem, StosProblem};

/// The structured problem behind an entry, when there is one.
#[derive(Debug, Clone)]
pub enum ProblemKind {
    /// A bare operator with no optimization problem attached.
    Plain,
    Sgd(SgdProblem),
    Stos(StosProblem),
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub operator: StochasticOperator,
    pub x0: Vector,
    pub known: KnownSolution,
    pub kind: ProblemKind,
}

/// Resolve a problem name. Fixed names: `identity`, `negate`, `translation`,
/// `sgd1d`, `sgd2dline`, `stos_eqls`. Parameterized:
/// `randomls:<dim>:<scenarios>:<seed>`.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    match name {
        "identity" => identity(),
        "negate" => negate(),
        "translation" => translation(),
        "sgd1d" => sgd1d(),
        "sgd2dline" => sgd2dline(),
        "stos_eqls" => stos_eqls(),
        other => {
            if let Some(rest) = other.strip_prefix("randomls:") {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::Usage(format!(
                        "expected randomls:<dim>:<scenarios>:<seed>, got `{other}`"
                    )));
                }
                let dim = parts[0]
                    .parse::<usize>()
                    .map_err(|_| Error::Usage(format!("bad dimension in `{other}`")))?;
                let scenarios = parts[1]
                    .parse::<usize>()
                    .map_err(|_| Error::Usage(format!("bad scenario count in `{other}`")))?;
                let seed = parts[2]
                    .parse::<u64>()
                    .map_err(|_| Error::Usage(format!("bad seed in `{other}`")))?;
                let prob = random_least_squares(dim, scenarios, seed)?;
                let known = prob.solve_reference(1e-10)?;
                Ok(CatalogEntry {
                    name: other.to_string(),
                    operator: prob.operator()?,
                    x0: Vector::new(vec![1.0; dim])?,
                    known,
                    kind: ProblemKind::Sgd(prob),
                })
            } else {
                Err(Error::Usage(format!("unknown problem `{other}`")))
            }
        }
    }
}

fn identity() -> Result<CatalogEntry> {
    let operator = StochasticOperator::new(2, ScenarioSet::uniform(1)?, OperatorRule::Identity)?;
    Ok(CatalogEntry {
        name: "identity".into(),
        x0: Vector::from_slice(&[1.0, 2.0])?,
        known: KnownSolution {
            x_star: Vector::zeros(2),
            p: Vector::zeros(2),
            sigma_star_sq: 0.0,
        },
        operator,
        kind: ProblemKind::Plain,
    })
}

fn negate() -> Result<CatalogEntry> {
    let operator = StochasticOperator::new(
        1,
        ScenarioSet::uniform(1)?,
        OperatorRule::Affine(vec![AffineMap::new(
            Matrix::identity(1).scale(-1.0),
            Vector::zeros(1),
        )?]),
    )?;
    Ok(CatalogEntry {
        name: "negate".into(),
        x0: Vector::from_slice(&[1.0])?,
        known: KnownSolution {
            x_star: Vector::zeros(1),
            p: Vector::zeros(1),
            sigma_star_sq: 0.0,
        },
        operator,
        kind: ProblemKind::Plain,
    })
}

fn translation() -> Result<CatalogEntry> {
    let operator = StochasticOperator::new(
        1,
        ScenarioSet::uniform(2)?,
        OperatorRule::Translation(vec![
            Vector::from_slice(&[1.0])?,
            Vector::from_slice(&[-1.0])?,
        ]),
    )?;
    // the expected operator is the identity: every point is fixed
    let p = Vector::zeros(1);
    let sigma_star_sq = operator.variance_at(&p)?;
    Ok(CatalogEntry {
        name: "translation".into(),
        x0: Vector::zeros(1),
        known: KnownSolution {
            x_star: p.clone(),
            p,
            sigma_star_sq,
        },
        operator,
        kind: ProblemKind::Plain,
    })
}

fn sgd1d() -> Result<CatalogEntry> {
    let prob = SgdProblem::new(
        GradientFamily::scalar_targets(&[-1.0, 1.0])?,
        ScenarioSet::uniform(2)?,
        0.5,
    )?;
    let known = prob.solve_reference(1e-12)?;
    Ok(CatalogEntry {
        name: "sgd1d".into(),
        operator: prob.operator()?,
        x0: Vector::from_slice(&[1.0])?,
        known,
        kind: ProblemKind::Sgd(prob),
    })
}

/// Components depend only on the first coordinate, so the fixed-point set is
/// the whole line `{x : x_0 = 0}`.
fn sgd2dline() -> Result<CatalogEntry> {
    let terms = [-1.0, 1.0]
        .iter()
        .map(|a| {
            LeastSquaresTerm::new(
                Matrix::from_rows(&[&[1.0, 0.0]])?,
                Vector::from_slice(&[*a])?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let prob = SgdProblem::new(
        GradientFamily::LeastSquares(terms),
        ScenarioSet::uniform(2)?,
        0.5,
    )?;
    let known = prob.solve_reference(1e-12)?;
    Ok(CatalogEntry {
        name: "sgd2dline".into(),
        operator: prob.operator()?,
        x0: Vector::from_slice(&[1.0, 1.0])?,
        known,
        kind: ProblemKind::Sgd(prob),
    })
}

/// Stochastic least squares restricted to the plane `x_0 + x_1 + x_2 = 1`,
/// with a wide box that stays inactive at the solution.
fn stos_eqls() -> Result<CatalogEntry> {
    let diag = |d: &[f64]| -> Result<Matrix> {
        let n = d.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in d.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Matrix::new(n, n, data)
    };
    let terms = vec![
        LeastSquaresTerm::new(
            diag(&[1.0, 0.9, 1.1])?,
            Vector::from_slice(&[0.6, 0.2, -0.1])?,
        )?,
        LeastSquaresTerm::new(
            diag(&[0.8, 1.0, 0.7])?,
            Vector::from_slice(&[0.1, 0.5, 0.3])?,
        )?,
        LeastSquaresTerm::new(
            diag(&[1.2, 0.6, 0.9])?,
            Vector::from_slice(&[-0.2, 0.4, 0.8])?,
        )?,
    ];
    let family = GradientFamily::LeastSquares(terms);
    let tau = 1.0 / family.max_curvature();
    let prob = StosProblem::new(
        ResolventKind::Box {
            lower: Vector::from_slice(&[-10.0, -10.0, -10.0])?,
            upper: Vector::from_slice(&[10.0, 10.0, 10.0])?,
        },
        ResolventKind::AffineSubspace {
            matrix: Matrix::from_rows(&[&[1.0, 1.0, 1.0]])?,
            rhs: Vector::from_slice(&[1.0])?,
        },
        family,
        ScenarioSet::new(vec![0.5, 0.3, 0.2])?,
        tau,
    )?;
    let known = prob.solve_reference(1e-10)?;
    Ok(CatalogEntry {
        name: "stos_eqls".into(),
        operator: prob.operator()?,
        x0: Vector::from_slice(&[2.0, 0.0, -1.0])?,
        known,
        kind: ProblemKind::Stos(prob),
    })
}

/// Seeded least-squares generator: `scenarios` single-row observations with
/// entries uniform in `[-1, 1]`, step `gamma = 1/L`.
pub fn random_least_squares(dim: usize, scenarios: usize, seed: u64) -> Result<SgdProblem> {
    if dim == 0 || scenarios == 0 {
        return Err(Error::invalid("random least squares needs positive sizes"));
    }
    let mut rng = stream_rng(seed, Stream::Generator);
    let terms = (0..scenarios)
        .map(|_| {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rhs = rng.gen_range(-1.0..1.0);
            LeastSquaresTerm::new(Matrix::new(1, dim, row)?, Vector::from_slice(&[rhs])?)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = GradientFamily::LeastSquares(terms);
    let curvature = family.max_curvature();
    let gamma = if curvature > 0.0 {
        1.0 / curvature
    } else {
        1.0
    };
    SgdProblem::new(family, ScenarioSet::uniform(scenarios)?, gamma)
}
