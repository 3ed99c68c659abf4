//! Brute-force oracles and inequality checkers.
//!
//! `enumerate_expectations` walks the full scenario tree of a run, so the
//! expectations entering the per-step decrease inequality and the residual
//! bound are exact up to floating point. The `check_*` functions turn those
//! inequalities into signed-margin reports; `fit_rate` measures empirical
//! decay exponents; `check_weighted_min_vanishing` is a numeric diagnostic
//! for the weighted running-minimum argument.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{linear_combination, Vector};
use crate::operators::StochasticOperator;
use crate::report::InequalityReport;
use crate::skm::{random_index_distribution, theoretical_residual_bound, Schedule};

/// Exact expectations of one run, obtained by full tree enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct EnumerationResult {
    pub horizon: usize,
    /// E ||x_k - p||^2 for k = 0..=K.
    pub dist_sq: Vec<f64>,
    /// E ||T x_k - x_k||^2 for k = 0..K.
    pub residual_sq: Vec<f64>,
    /// E of the squared residual at the randomized output index.
    pub expected_residual_sq_at_output: f64,
    pub path_count: u64,
    pub total_probability: f64,
}

/// Walk the full m-ary trajectory tree of depth `horizon`, accumulating
/// exact path-probability-weighted expectations relative to the fixed point
/// `p`. Refuses when `m^horizon` exceeds `budget`.
pub fn enumerate_expectations(
    op: &StochasticOperator,
    schedule: &Schedule,
    x0: &Vector,
    horizon: usize,
    p: &Vector,
    budget: u64,
) -> Result<EnumerationResult> {
    if x0.dim() != op.dim() || p.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x0.dim(),
        });
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let m = op.scenarios().len() as u128;
    let required = m.checked_pow(horizon as u32).ok_or(Error::BudgetExceeded {
        required: u128::MAX,
        budget,
    })?;
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }

    let lambdas = schedule.lambdas(horizon)?;
    let mut acc = Accumulator {
        dist_sq: vec![0.0; horizon + 1],
        residual_sq: vec![0.0; horizon],
        total_probability: 0.0,
        path_count: 0,
    };
    walk(op, &lambdas, p, x0, 0, 1.0, &mut acc)?;

    let dist = random_index_distribution(schedule, horizon)?;
    let expected_residual_sq_at_output = dist
        .probs()
        .iter()
        .zip(&acc.residual_sq)
        .map(|(q, r)| q * r)
        .sum();

    Ok(EnumerationResult {
        horizon,
        dist_sq: acc.dist_sq,
        residual_sq: acc.residual_sq,
        expected_residual_sq_at_output,
        path_count: acc.path_count,
        total_probability: acc.total_probability,
    })
}

struct Accumulator {
    dist_sq: Vec<f64>,
    residual_sq: Vec<f64>,
    total_probability: f64,
    path_count: u64,
}

fn walk(
    op: &StochasticOperator,
    lambdas: &[f64],
    p: &Vector,
    x: &Vector,
    depth: usize,
    weight: f64,
    acc: &mut Accumulator,
) -> Result<()> {
    acc.dist_sq[depth] += weight * x.distance_sq(p);
    if depth == lambdas.len() {
        acc.total_probability += weight;
        acc.path_count += 1;
        return Ok(());
    }
    let r = op.residual(x)?;
    acc.residual_sq[depth] += weight * r * r;
    let lambda = lambdas[depth];
    for i in 0..op.scenarios().len() {
        let t = op.apply(i, x)?;
        let next = linear_combination(1.0 - lambda, x, lambda, &t);
        walk(
            op,
            lambdas,
            p,
            &next,
            depth + 1,
            weight * op.scenarios().prob(i),
            acc,
        )?;
    }
    Ok(())
}

fn require_fixed_point(op: &StochasticOperator, p: &Vector) -> Result<()> {
    let r = op.residual(p)?;
    if r > 1e-8 {
        return Err(Error::rejected(format!(
            "supplied point is not fixed (residual {r:.3e})"
        )));
    }
    Ok(())
}

/// Per-state margins of the one-step decrease inequality
/// `E||x+ - p||^2 <= (1 + 8 l^2) ||x - p||^2 - l (1 - l) ||Tx - x||^2 + 2 l^2 sigma*^2`,
/// with the left side computed exactly over the scenario set.
pub fn check_decrease_inequality(
    op: &StochasticOperator,
    p: &Vector,
    states: &[Vector],
    lambda: f64,
    sigma_star_sq: f64,
) -> Result<InequalityReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::rejected("lambda must lie in (0, 1)"));
    }
    require_fixed_point(op, p)?;
    let mut margins = Vec::with_capacity(states.len());
    for x in states {
        let d_sq = x.distance_sq(p);
        let tx = op.expected_apply(x)?;
        let r_sq = tx.distance_sq(x);
        let mut lhs = 0.0;
        for i in 0..op.scenarios().len() {
            let next = linear_combination(1.0 - lambda, x, lambda, &op.apply(i, x)?);
            lhs += op.scenarios().prob(i) * next.distance_sq(p);
        }
        let rhs = (1.0 + 8.0 * lambda * lambda) * d_sq - lambda * (1.0 - lambda) * r_sq
            + 2.0 * lambda * lambda * sigma_star_sq;
        margins.push(rhs - lhs);
    }
    Ok(InequalityReport::from_margins(
        "decrease_inequality",
        margins,
        1e-10,
    ))
}

/// Margins of the variance transfer inequality
/// `E||(T_i - T) x||^2 <= 2 sigma*^2 + 8 ||x - p||^2`.
pub fn check_variance_transfer(
    op: &StochasticOperator,
    p: &Vector,
    sigma_star_sq: f64,
    points: &[Vector],
) -> Result<InequalityReport> {
    require_fixed_point(op, p)?;
    let mut margins = Vec::with_capacity(points.len());
    for x in points {
        let rhs = 2.0 * sigma_star_sq + 8.0 * x.distance_sq(p);
        margins.push(rhs - op.variance_at(x)?);
    }
    Ok(InequalityReport::from_margins(
        "variance_transfer",
        margins,
        1e-9,
    ))
}

/// The operator variance must agree across fixed points. Margins are the
/// negated pairwise differences, so the report passes iff the largest
/// difference stays within tolerance.
pub fn check_variance_constancy(
    op: &StochasticOperator,
    fixed_points: &[Vector],
) -> Result<InequalityReport> {
    let mut variances = Vec::with_capacity(fixed_points.len());
    for p in fixed_points {
        require_fixed_point(op, p)?;
        variances.push(op.variance_at(p)?);
    }
    let mut margins = Vec::new();
    for i in 0..variances.len() {
        for j in (i + 1)..variances.len() {
            margins.push(-(variances[i] - variances[j]).abs());
        }
    }
    Ok(InequalityReport::from_margins(
        "variance_constancy",
        margins,
        1e-10,
    ))
}

/// Compare the exact expected squared residual at the output index with the
/// closed-form bound for the same schedule and horizon.
pub fn check_residual_bound(
    enumeration: &EnumerationResult,
    schedule: &Schedule,
    dist0_sq: f64,
    sigma_star_sq: f64,
) -> Result<InequalityReport> {
    if let Schedule::ConstantHorizon { horizon, .. } = schedule {
        if *horizon != enumeration.horizon {
            return Err(Error::HorizonMismatch {
                expected: *horizon,
                got: enumeration.horizon,
            });
        }
    }
    let bound = theoretical_residual_bound(schedule, enumeration.horizon, dist0_sq, sigma_star_sq)?;
    let margin = bound - enumeration.expected_residual_sq_at_output;
    Ok(InequalityReport::from_margins(
        "residual_bound",
        vec![margin],
        1e-9,
    ))
}

/// Ordinary least squares fit of `log(value)` against `log(K)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate(horizons: &[usize], values: &[f64]) -> Result<RateFit> {
    if horizons.len() != values.len() {
        return Err(Error::invalid("horizons and values must have equal length"));
    }
    if horizons.len() < 3 {
        return Err(Error::invalid("rate fit needs at least three points"));
    }
    if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::rejected("rate fit needs strictly positive values"));
    }
    let points: Vec<(f64, f64)> = horizons
        .iter()
        .zip(values)
        .map(|(k, v)| ((*k as f64).ln(), v.ln()))
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "rate fit needs at least two distinct horizons",
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(RateFit {
        points,
        slope,
        intercept,
        r_squared,
    })
}

/// A nonnegative power sequence `s_k = coeff * (k + 1)^(-exponent)`.
#[derive(Debug, Clone, Copy)]
pub struct SequenceSpec {
    pub coeff: f64,
    pub exponent: f64,
}

impl SequenceSpec {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff >= 0.0 && coeff.is_finite() && exponent.is_finite()) {
            return Err(Error::rejected(
                "sequence spec needs finite nonnegative coefficient",
            ));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn eval(&self, k: usize) -> f64 {
        self.coeff * ((k + 1) as f64).powf(-self.exponent)
    }
}

/// Numeric diagnostic for the weighted running-minimum argument: with
/// `S_K = sum_{k<K} eta_k` divergent and `sum eta_k x_k` convergent, the
/// product `S_K * min_{k<K} x_k` must vanish. The check samples the product
/// on a doubling grid up to `k_max` and passes iff the final value has
/// dropped to at most half of the grid maximum.
pub fn check_weighted_min_vanishing(
    eta: &SequenceSpec,
    x: &SequenceSpec,
    k_max: usize,
) -> Result<InequalityReport> {
    if k_max < 2 {
        return Err(Error::rejected("diagnostic needs k_max >= 2"));
    }
    if eta.coeff == 0.0 || eta.exponent > 1.0 {
        return Err(Error::rejected("eta must have a divergent sum"));
    }
    if x.coeff > 0.0 && eta.exponent + x.exponent <= 1.0 {
        return Err(Error::rejected("sum of eta_k * x_k must converge"));
    }

    let mut grid = Vec::new();
    let mut g = 1usize;
    while g < k_max {
        grid.push(g);
        g *= 2;
    }
    grid.push(k_max);

    let mut products = Vec::with_capacity(grid.len());
    let mut sum = 0.0;
    let mut min_x = f64::INFINITY;
    let mut next = 0;
    for k in 0..k_max {
        sum += eta.eval(k);
        min_x = min_x.min(x.eval(k));
        if next < grid.len() && k + 1 == grid[next] {
            products.push(sum * min_x);
            next += 1;
        }
    }

    let max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = *products.last().unwrap();
    let margin = max / 2.0 - last;
    Ok(InequalityReport::from_margins(
        "weighted_min_vanishing",
        vec![margin],
        0.0,
    ))
}
