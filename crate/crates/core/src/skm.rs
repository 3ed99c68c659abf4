//! Relaxation schedules, the product weights Lambda_k, the randomized output
//! index, the stochastic fixed-point iteration loop, and its theoretical
//! residual bound.
//!
//! The iteration is `x_{k+1} = (1 - lambda_k) x_k + lambda_k T_{xi_k} x_k`
//! with scenarios drawn i.i.d. from the operator's distribution. Runs are
//! reproducible bit for bit from `(operator, schedule, x0, K, seed)`: the
//! scenario draws use the trajectory stream of the seed, while the output
//! index uses a separate stream, so the reported iterate is independent of
//! the path randomness.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{linear_combination, Vector};
use crate::operators::StochasticOperator;
use crate::rng::{inverse_cdf, stream_rng, Stream};

/// Relaxation sequence `lambda_k`, always inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// lambda_k = lambda0 * (k + 1)^(-exponent), exponent in (1/2, 1].
    PowerDecay { lambda0: f64, exponent: f64 },
    /// lambda_k = lambda0 / sqrt(K) for all k < K.
    ConstantHorizon { lambda0: f64, horizon: usize },
}

impl Schedule {
    pub fn power_decay(lambda0: f64, exponent: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0 < 1.0) {
            return Err(Error::invalid("power decay needs lambda0 in (0, 1)"));
        }
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::invalid("power decay needs exponent in (1/2, 1]"));
        }
        Ok(Schedule::PowerDecay { lambda0, exponent })
    }

    pub fn constant_horizon(lambda0: f64, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::invalid("constant schedule needs lambda0 > 0"));
        }
        // the constant value lambda0 / sqrt(K) must stay below 1
        if lambda0 / (horizon as f64).sqrt() >= 1.0 {
            return Err(Error::invalid(format!(
                "lambda0 = {lambda0} leaves (0, 1) at horizon {horizon}"
            )));
        }
        Ok(Schedule::ConstantHorizon { lambda0, horizon })
    }

    /// Constant schedule with the given per-step value `lambda_bar`.
    pub fn constant_value(lambda_bar: f64, horizon: usize) -> Result<Self> {
        Self::constant_horizon(lambda_bar * (horizon as f64).sqrt(), horizon)
    }

    pub fn lambda(&self, k: usize) -> Result<f64> {
        match self {
            Schedule::PowerDecay { lambda0, exponent } => {
                Ok(lambda0 * ((k + 1) as f64).powf(-exponent))
            }
            Schedule::ConstantHorizon { lambda0, horizon } => {
                if k >= *horizon {
                    return Err(Error::HorizonMismatch {
                        expected: *horizon,
                        got: k,
                    });
                }
                Ok(lambda0 / (*horizon as f64).sqrt())
            }
        }
    }

    /// lambda_0 .. lambda_{K-1}.
    pub fn lambdas(&self, horizon: usize) -> Result<Vec<f64>> {
        (0..horizon).map(|k| self.lambda(k)).collect()
    }

    fn check_horizon(&self, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if let Schedule::ConstantHorizon { horizon: own, .. } = self {
            if horizon > *own {
                return Err(Error::HorizonMismatch {
                    expected: *own,
                    got: horizon,
                });
            }
        }
        Ok(())
    }
}

/// The products Lambda_k = prod_{i<k} (1 + 8 lambda_i^2)^{-1}, for k = 0..=K.
#[derive(Debug, Clone)]
pub struct LambdaProducts {
    values: Vec<f64>,
}

impl LambdaProducts {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Lambda_0 .. Lambda_K for the given schedule.
pub fn lambda_products(schedule: &Schedule, horizon: usize) -> Result<LambdaProducts> {
    schedule.check_horizon(horizon)?;
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(1.0);
    let mut current = 1.0;
    for k in 0..horizon {
        let lk = schedule.lambda(k)?;
        current /= 1.0 + 8.0 * lk * lk;
        values.push(current);
    }
    Ok(LambdaProducts { values })
}

/// Distribution of the randomized output index over `0..K`, with
/// `P(N = k)` proportional to `Lambda_{k+1} lambda_k (1 - lambda_k)`.
#[derive(Debug, Clone)]
pub struct RandomIndexDistribution {
    probs: Vec<f64>,
}

impl RandomIndexDistribution {
    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, u: f64) -> usize {
        inverse_cdf(&self.probs, u)
    }
}

pub fn random_index_distribution(
    schedule: &Schedule,
    horizon: usize,
) -> Result<RandomIndexDistribution> {
    let products = lambda_products(schedule, horizon)?;
    let mut weights = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let lk = schedule.lambda(k)?;
        weights.push(products.value(k + 1) * lk * (1.0 - lk));
    }
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::invalid(
            "output index weights must have positive total",
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(RandomIndexDistribution { probs: weights })
}

/// What `run_skm` records beyond the iterates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordFlags {
    /// Record `||T x_k - x_k||` for every iterate. Costs one full
    /// expected-operator evaluation per step, which is exactly what the
    /// stochastic iteration otherwise avoids.
    pub residuals: bool,
}

/// One seeded run: iterates `x_0..x_K` and the drawn scenario indices.
#[derive(Debug, Clone)]
pub struct Trajectory {
    iterates: Vec<Vector>,
    drawn: Vec<usize>,
    seed: u64,
    residuals: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.drawn.len()
    }

    pub fn iterates(&self) -> &[Vector] {
        &self.iterates
    }

    pub fn iterate(&self, k: usize) -> &Vector {
        &self.iterates[k]
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().unwrap()
    }

    pub fn drawn_scenarios(&self) -> &[usize] {
        &self.drawn
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Residuals per iterate, when recorded.
    pub fn residuals(&self) -> Option<&[f64]> {
        self.residuals.as_deref()
    }
}

/// Run the stochastic iteration for `horizon` steps from `x0`.
pub fn run_skm(
    op: &StochasticOperator,
    schedule: &Schedule,
    x0: &Vector,
    horizon: usize,
    seed: u64,
    record: RecordFlags,
) -> Result<Trajectory> {
    if x0.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x0.dim(),
        });
    }
    schedule.check_horizon(horizon)?;

    let mut rng = stream_rng(seed, Stream::Trajectory);
    let mut iterates = Vec::with_capacity(horizon + 1);
    let mut drawn = Vec::with_capacity(horizon);
    let mut residuals = if record.residuals {
        Some(Vec::with_capacity(horizon + 1))
    } else {
        None
    };

    let mut x = x0.clone();
    if let Some(r) = residuals.as_mut() {
        r.push(op.residual(&x)?);
    }
    iterates.push(x.clone());

    for k in 0..horizon {
        let lambda = schedule.lambda(k)?;
        let u: f64 = rng.gen();
        let scenario = op.sample_scenario(u);
        let t = op.apply(scenario, &x)?;
        x = linear_combination(1.0 - lambda, &x, lambda, &t);
        drawn.push(scenario);
        if let Some(r) = residuals.as_mut() {
            r.push(op.residual(&x)?);
        }
        iterates.push(x.clone());
    }

    Ok(Trajectory {
        iterates,
        drawn,
        seed,
        residuals,
    })
}

/// Sample the output iterate `x_N` with a generator independent of the
/// trajectory's draws.
pub fn sample_output(
    traj: &Trajectory,
    dist: &RandomIndexDistribution,
    seed: u64,
) -> Result<(usize, Vector)> {
    if dist.horizon() > traj.horizon() {
        return Err(Error::HorizonMismatch {
            expected: traj.horizon(),
            got: dist.horizon(),
        });
    }
    let mut rng = stream_rng(seed, Stream::OutputIndex);
    let u: f64 = rng.gen();
    let k = dist.sample(u);
    Ok((k, traj.iterate(k).clone()))
}

/// Prefix minima of the residuals along a trajectory: entry `j` is
/// `min_{k <= j} ||T x_k - x_k||` for `j < K`.
pub fn running_min_residual(op: &StochasticOperator, traj: &Trajectory) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.horizon());
    let mut best = f64::INFINITY;
    for k in 0..traj.horizon() {
        best = best.min(op.residual(traj.iterate(k))?);
        out.push(best);
    }
    Ok(out)
}

/// The residual-bound value
/// `(dist0^2 + 2 sigma*^2 sum lambda_k^2) / (Lambda_K sum lambda_k (1 - lambda_k))`.
pub fn theoretical_residual_bound(
    schedule: &Schedule,
    horizon: usize,
    dist0_sq: f64,
    sigma_star_sq: f64,
) -> Result<f64> {
    if dist0_sq < 0.0 || sigma_star_sq < 0.0 {
        return Err(Error::invalid("squared quantities must be nonnegative"));
    }
    let lambdas = schedule.lambdas(horizon)?;
    let products = lambda_products(schedule, horizon)?;
    let sq_sum: f64 = lambdas.iter().map(|l| l * l).sum();
    let weight_sum: f64 = lambdas.iter().map(|l| l * (1.0 - l)).sum();
    Ok((dist0_sq + 2.0 * sigma_star_sq * sq_sum) / (products.last() * weight_sum))
}
