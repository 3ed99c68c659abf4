//! Concrete problem instantiations with known solutions.
//!
//! Two families are provided. Finite-sum smooth convex minimization drives
//! the gradient-step operator `T_i = I - gamma * grad f_i`, whose fixed
//! points are exactly the minimizers. Monotone inclusions
//! `0 in A(x) + B(x) + C(x)` drive the stochastic three-operator composite;
//! its fixed points map onto the zeros of the inclusion through the
//! A-resolvent. Both come with an independent reference oracle that locates
//! the solution, the lifted fixed point, and the operator variance at it.

mod catalog;

pub use catalog::{lookup, random_least_squares, CatalogEntry, ProblemKind};

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, Matrix, Vector};
use crate::operators::{
    GradientFamily, OperatorRule, ResolventDescriptor, ResolventKind, ScenarioSet,
    StochasticOperator,
};

/// A solved instance: the solution of the original problem, the fixed point
/// of the induced operator, and the operator variance at that fixed point.
#[derive(Debug, Clone)]
pub struct KnownSolution {
    pub x_star: Vector,
    pub p: Vector,
    pub sigma_star_sq: f64,
}

impl KnownSolution {
    /// Squared distance from a start point to the known fixed point; an
    /// upper bound on the squared distance to the full fixed-point set.
    pub fn dist0_sq(&self, x0: &Vector) -> f64 {
        x0.distance_sq(&self.p)
    }
}

/// Finite-sum smooth convex minimization: components `f_i` with closed-form
/// gradients, scenario probabilities, and a step `gamma` in `(0, 2/L)`.
#[derive(Debug, Clone)]
pub struct SgdProblem {
    family: GradientFamily,
    scenarios: ScenarioSet,
    gamma: f64,
    smoothness: f64,
}

impl SgdProblem {
    pub fn new(family: GradientFamily, scenarios: ScenarioSet, gamma: f64) -> Result<Self> {
        let dim = family
            .input_dim()
            .ok_or_else(|| Error::invalid("gradient family must be nonempty"))?;
        family.validate(dim)?;
        if family.components() != scenarios.len() {
            return Err(Error::invalid("need one objective component per scenario"));
        }
        let smoothness = family.max_curvature();
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma must be positive"));
        }
        if smoothness > 0.0 && gamma >= 2.0 / smoothness {
            return Err(Error::invalid(format!(
                "gamma = {gamma} is outside (0, 2/L) with L = {smoothness}"
            )));
        }
        Ok(Self {
            family,
            scenarios,
            gamma,
            smoothness,
        })
    }

    pub fn dim(&self) -> usize {
        self.family.input_dim().unwrap()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn family(&self) -> &GradientFamily {
        &self.family
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    /// The induced stochastic operator `T_i x = x - gamma * grad f_i(x)`.
    pub fn operator(&self) -> Result<StochasticOperator> {
        StochasticOperator::new(
            self.dim(),
            self.scenarios.clone(),
            OperatorRule::GradientStep {
                gamma: self.gamma,
                family: self.family.clone(),
            },
        )
    }

    pub fn expected_gradient(&self, x: &Vector) -> Vector {
        self.family.expected_gradient(self.scenarios.probs(), x)
    }

    /// Locate a minimizer: normal equations for least-squares objectives,
    /// full-gradient descent otherwise, down to `||grad f|| <= tol`.
    pub fn solve_reference(&self, tol: f64) -> Result<KnownSolution> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::invalid("tolerance must be positive"));
        }
        // the fixed-point residual is gamma * ||grad f||, and the reference
        // point must pass the residual test at 1e-8
        let grad_target = tol.min(1e-9 / self.gamma);

        let mut solution = self.normal_equations();
        let converged = match &solution {
            Some(x) => self.expected_gradient(x).norm() <= grad_target,
            None => false,
        };
        if !converged {
            solution = Some(self.gradient_descent(grad_target)?);
        }
        let x_star = solution.unwrap();

        let op = self.operator()?;
        let residual = op.residual(&x_star)?;
        if residual > 1e-8 {
            return Err(Error::OracleFailure(format!(
                "reference minimizer has residual {residual:.3e}"
            )));
        }
        let sigma_star_sq = op.variance_at(&x_star)?;
        Ok(KnownSolution {
            p: x_star.clone(),
            x_star,
            sigma_star_sq,
        })
    }

    fn normal_equations(&self) -> Option<Vector> {
        let GradientFamily::LeastSquares(terms) = &self.family else {
            return None;
        };
        let n = self.dim();
        let mut h = Matrix::identity(n).scale(0.0);
        let mut g = Vector::zeros(n);
        for (term, p) in terms.iter().zip(self.scenarios.probs()) {
            h = h.add(&term.matrix.gram().scale(*p));
            g = g.add(&term.matrix.transpose_matvec(&term.offset).scale(*p));
        }
        solve_linear(&h, &g).ok()
    }

    fn gradient_descent(&self, grad_target: f64) -> Result<Vector> {
        let step = if self.smoothness > 0.0 {
            1.0 / self.smoothness
        } else {
            1.0
        };
        let mut x = Vector::zeros(self.dim());
        for _ in 0..5_000_000 {
            let g = self.expected_gradient(&x);
            if g.norm() <= grad_target {
                return Ok(x);
            }
            x = x.sub(&g.scale(step));
        }
        Err(Error::OracleFailure(
            "gradient descent did not reach the target gradient norm".into(),
        ))
    }
}

/// A monotone inclusion `0 in A(x) + B(x) + C(x)` with `C` known through a
/// stochastic gradient family. `B` is restricted to operators with an affine
/// resolvent (zero, or the normal cone of an affine subspace) so that the
/// expected composite and the deterministic composite coincide.
#[derive(Debug, Clone)]
pub struct StosProblem {
    a: ResolventDescriptor,
    b: ResolventDescriptor,
    c: GradientFamily,
    scenarios: ScenarioSet,
    rho: f64,
    tau: f64,
}

impl StosProblem {
    pub fn new(
        a_kind: ResolventKind,
        b_kind: ResolventKind,
        c: GradientFamily,
        scenarios: ScenarioSet,
        rho: f64,
    ) -> Result<Self> {
        let dim = c
            .input_dim()
            .ok_or_else(|| Error::invalid("gradient family must be nonempty"))?;
        c.validate(dim)?;
        if c.components() != scenarios.len() {
            return Err(Error::invalid("need one gradient component per scenario"));
        }
        if !matches!(
            a_kind,
            ResolventKind::Zero | ResolventKind::Box { .. } | ResolventKind::L1 { .. }
        ) {
            return Err(Error::invalid(
                "A must be a box normal cone, an l1 subdifferential, or zero",
            ));
        }
        if !matches!(
            b_kind,
            ResolventKind::Zero | ResolventKind::AffineSubspace { .. }
        ) {
            return Err(Error::invalid(
                "B must be an affine-subspace normal cone or zero",
            ));
        }
        let curvature = c.max_curvature();
        let tau = if curvature > 0.0 {
            1.0 / curvature
        } else {
            f64::INFINITY
        };
        if !(rho > 0.0 && rho.is_finite() && rho < 2.0 * tau) {
            return Err(Error::invalid(format!(
                "rho = {rho} is outside (0, 2 tau) with tau = {tau}"
            )));
        }
        let a = ResolventDescriptor::new(a_kind, rho)?;
        let b = ResolventDescriptor::new(b_kind, rho)?;
        a.check_dim(dim)?;
        b.check_dim(dim)?;
        Ok(Self {
            a,
            b,
            c,
            scenarios,
            rho,
            tau,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.input_dim().unwrap()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn resolvent_a(&self) -> &ResolventDescriptor {
        &self.a
    }

    pub fn resolvent_b(&self) -> &ResolventDescriptor {
        &self.b
    }

    pub fn gradient_family(&self) -> &GradientFamily {
        &self.c
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn expected_c(&self, x: &Vector) -> Vector {
        self.c.expected_gradient(self.scenarios.probs(), x)
    }

    /// The induced stochastic operator
    /// `T_i = I - Ja + Jb o (2 Ja - I - rho C_i o Ja)`.
    pub fn operator(&self) -> Result<StochasticOperator> {
        StochasticOperator::new(
            self.dim(),
            self.scenarios.clone(),
            OperatorRule::DavisYin {
                rho: self.rho,
                a: self.a.clone(),
                b: self.b.clone(),
                c: self.c.clone(),
            },
        )
    }

    /// One splitting step: `y = Ja(x)`, `z = Jb(2y - x - rho C_i(y))`,
    /// `x_next = x - lambda (y - z)`.
    pub fn step(
        &self,
        x: &Vector,
        scenario: usize,
        lambda: f64,
    ) -> Result<(Vector, Vector, Vector)> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::rejected("lambda must lie in (0, 1)"));
        }
        if scenario >= self.scenarios.len() {
            return Err(Error::ScenarioOutOfRange {
                index: scenario,
                count: self.scenarios.len(),
            });
        }
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let y = self.a.apply(x)?;
        let inner = y
            .scale(2.0)
            .sub(x)
            .sub(&self.c.gradient(scenario, &y).scale(self.rho));
        let z = self.b.apply(&inner)?;
        let x_next = x.sub(&y.sub(&z).scale(lambda));
        Ok((y, z, x_next))
    }

    fn deterministic_composite(&self, x: &Vector) -> Result<(Vector, Vector)> {
        let y = self.a.apply(x)?;
        let inner = y
            .scale(2.0)
            .sub(x)
            .sub(&self.expected_c(&y).scale(self.rho));
        let z = self.b.apply(&inner)?;
        Ok((y, z))
    }

    /// Locate a zero of `A + B + C` by iterating the deterministic composite
    /// with the exact expected `C` until `||y - z|| <= tol`, then lift it.
    pub fn solve_reference(&self, tol: f64) -> Result<KnownSolution> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let gap_target = tol.min(1e-9);
        let mut x = Vector::zeros(self.dim());
        let mut converged = false;
        for _ in 0..2_000_000 {
            let (y, z) = self.deterministic_composite(&x)?;
            if y.distance(&z) <= gap_target {
                converged = true;
                break;
            }
            x = x.sub(&y.sub(&z));
        }
        if !converged {
            return Err(Error::OracleFailure(
                "splitting iteration did not close the y-z gap".into(),
            ));
        }
        let op = self.operator()?;
        let residual = op.residual(&x)?;
        if residual > 1e-8 {
            return Err(Error::OracleFailure(format!(
                "reference fixed point has residual {residual:.3e}"
            )));
        }
        let x_star = self.a.apply(&x)?;
        let sigma_star_sq = op.variance_at(&x)?;
        Ok(KnownSolution {
            x_star,
            p: x,
            sigma_star_sq,
        })
    }

    /// Closed-form solution for least-squares objectives with an affine
    /// equality constraint, via the stationarity system solved by
    /// elimination. Valid when the A-operator is inactive at the solution
    /// (zero, or a box containing it in its interior).
    pub fn kkt_solution(&self) -> Result<Vector> {
        let GradientFamily::LeastSquares(terms) = &self.c else {
            return Err(Error::invalid(
                "closed-form solve needs least-squares objectives",
            ));
        };
        let n = self.dim();
        let mut h = Matrix::identity(n).scale(0.0);
        let mut g = Vector::zeros(n);
        for (term, p) in terms.iter().zip(self.scenarios.probs()) {
            h = h.add(&term.matrix.gram().scale(*p));
            g = g.add(&term.matrix.transpose_matvec(&term.offset).scale(*p));
        }
        match &self.b.kind {
            ResolventKind::Zero => solve_linear(&h, &g),
            ResolventKind::AffineSubspace { matrix, rhs } => {
                let r = matrix.rows();
                let size = n + r;
                let mut data = vec![0.0; size * size];
                for i in 0..n {
                    for j in 0..n {
                        data[i * size + j] = h.get(i, j);
                    }
                    for j in 0..r {
                        data[i * size + (n + j)] = matrix.get(j, i);
                    }
                }
                for i in 0..r {
                    for j in 0..n {
                        data[(n + i) * size + j] = matrix.get(i, j);
                    }
                }
                let kkt = Matrix::new(size, size, data)?;
                let mut rhs_full = g.coords().to_vec();
                rhs_full.extend_from_slice(rhs.coords());
                let sol = solve_linear(&kkt, &Vector::new(rhs_full)?)?;
                Vector::from_slice(&sol.coords()[..n])
            }
            _ => Err(Error::invalid(
                "closed-form solve needs an affine or zero B",
            )),
        }
    }

    /// Lift a zero `z` of the inclusion to a fixed point `x = z + rho a` of
    /// the expected composite, given a certificate `a in A(z)`.
    pub fn lift_zero_to_fixed_point(&self, z: &Vector, a_cert: &Vector) -> Result<Vector> {
        if z.dim() != self.dim() || a_cert.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        let defect = graph_defect(&self.a.kind, z, a_cert, 1e-9)?;
        if defect > 1e-9 {
            return Err(Error::rejected(format!(
                "certificate is not in A(z): defect {defect:.3e}"
            )));
        }
        Ok(z.add(&a_cert.scale(self.rho)))
    }
}

/// How far `candidate` is from the set `A(z)` for a catalog operator, with
/// `tol` classifying active constraints. Zero means membership; a domain
/// violation of `z` also counts as a defect.
pub fn graph_defect(kind: &ResolventKind, z: &Vector, candidate: &Vector, tol: f64) -> Result<f64> {
    if z.dim() != candidate.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: candidate.dim(),
        });
    }
    Ok(match kind {
        ResolventKind::Zero => candidate.norm(),
        ResolventKind::Quadratic { q, linear } => candidate.distance(&q.matvec(z).add(linear)),
        ResolventKind::Box { lower, upper } => {
            let mut defect = 0.0_f64;
            for i in 0..z.dim() {
                let (zi, ai) = (z[i], candidate[i]);
                let (l, u) = (lower[i], upper[i]);
                defect = defect.max(l - zi).max(zi - u);
                let at_lower = zi <= l + tol;
                let at_upper = zi >= u - tol;
                let cone = match (at_lower, at_upper) {
                    (true, true) => 0.0,
                    (true, false) => ai.max(0.0),
                    (false, true) => (-ai).max(0.0),
                    (false, false) => ai.abs(),
                };
                defect = defect.max(cone);
            }
            defect
        }
        ResolventKind::L1 { weight } => {
            let mut defect = 0.0_f64;
            for i in 0..z.dim() {
                let (zi, ai) = (z[i], candidate[i]);
                let coord = if zi > tol {
                    (ai - weight).abs()
                } else if zi < -tol {
                    (ai + weight).abs()
                } else {
                    (ai.abs() - weight).max(0.0)
                };
                defect = defect.max(coord);
            }
            defect
        }
        ResolventKind::AffineSubspace { matrix, rhs } => {
            let feasibility = matrix.matvec(z).distance(rhs);
            // distance of the candidate to range(M^T)
            let mu = solve_linear(&matrix.outer_gram(), &matrix.matvec(candidate))?;
            let range_defect = candidate.distance(&matrix.transpose_matvec(&mu));
            feasibility.max(range_defect)
        }
        ResolventKind::Ball { center, radius } => {
            let d = z.sub(center);
            let n = d.norm();
            let domain = (n - radius).max(0.0);
            let boundary_width = tol * (1.0 + radius);
            let cone = if n < radius - boundary_width {
                candidate.norm()
            } else if n > 0.0 {
                let radial = candidate.dot(&d) / n;
                let tangential = candidate.sub(&d.scale(radial / n)).norm();
                tangential.max((-radial).max(0.0))
            } else {
                candidate.norm()
            };
            domain.max(cone)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::skm::{run_skm, RecordFlags, Schedule};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn sgd1d() -> SgdProblem {
        SgdProblem::new(
            GradientFamily::scalar_targets(&[-1.0, 1.0]).unwrap(),
            ScenarioSet::uniform(2).unwrap(),
            0.5,
        )
        .unwrap()
    }

    fn unconstrained_stos() -> StosProblem {
        // A = B = 0, C = grad of 1/2 ||x||^2
        StosProblem::new(
            ResolventKind::Zero,
            ResolventKind::Zero,
            GradientFamily::scalar_targets(&[0.0]).unwrap(),
            ScenarioSet::uniform(1).unwrap(),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn sgd_operator_matches_closed_form() {
        let op = sgd1d().operator().unwrap();
        // T_i x = 0.5 x + 0.5 a_i
        let x = v(&[2.0]);
        assert_abs_diff_eq!(op.apply(0, &x).unwrap()[0], 0.5 * 2.0 - 0.5);
        assert_abs_diff_eq!(op.apply(1, &x).unwrap()[0], 0.5 * 2.0 + 0.5);
        // fixed point at the mean target
        assert_abs_diff_eq!(op.residual(&v(&[0.0])).unwrap(), 0.0, epsilon = 1e-15);
        // gamma^2 E||grad f_i(0)||^2 = 0.25
        assert_abs_diff_eq!(op.variance_at(&v(&[0.0])).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sgd_rejects_bad_gamma() {
        let err = SgdProblem::new(
            GradientFamily::scalar_targets(&[-1.0, 1.0]).unwrap(),
            ScenarioSet::uniform(2).unwrap(),
            2.0,
        );
        assert!(err.is_err());
        assert!(SgdProblem::new(
            GradientFamily::scalar_targets(&[0.0]).unwrap(),
            ScenarioSet::uniform(1).unwrap(),
            1.9
        )
        .is_ok());
    }

    #[test]
    fn sgd_single_component_is_deterministic_descent() {
        let prob = SgdProblem::new(
            GradientFamily::scalar_targets(&[3.0]).unwrap(),
            ScenarioSet::uniform(1).unwrap(),
            0.5,
        )
        .unwrap();
        let op = prob.operator().unwrap();
        assert_abs_diff_eq!(op.variance_at(&v(&[1.0])).unwrap(), 0.0);
        let sol = prob.solve_reference(1e-10).unwrap();
        assert_abs_diff_eq!(sol.x_star[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn sgd_reference_solution() {
        let sol = sgd1d().solve_reference(1e-10).unwrap();
        assert_abs_diff_eq!(sol.x_star[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.sigma_star_sq, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.dist0_sq(&v(&[1.0])), 1.0);
    }

    #[test]
    fn sgd_variance_identity_at_solution() {
        // operator variance at the minimizer equals gamma^2 E||grad f_i||^2
        let prob = sgd1d();
        let op = prob.operator().unwrap();
        let sol = prob.solve_reference(1e-12).unwrap();
        let mut second = 0.0;
        for (i, p) in prob.scenarios().probs().iter().enumerate() {
            second += p * prob.family().gradient(i, &sol.x_star).norm_sq();
        }
        let expected = prob.gamma() * prob.gamma() * second;
        assert_abs_diff_eq!(
            op.variance_at(&sol.x_star).unwrap(),
            expected,
            epsilon = 1e-10
        );
    }

    #[test]
    fn stos_collapses_without_a_and_b() {
        let prob = unconstrained_stos();
        let op = prob.operator().unwrap();
        // T x = x - rho * C x = (1 - 0.5) x
        let x = v(&[2.0]);
        assert_abs_diff_eq!(op.apply(0, &x).unwrap()[0], 1.0);

        let (y, z, x_next) = prob.step(&x, 0, 0.25).unwrap();
        assert_abs_diff_eq!(y[0], 2.0);
        assert_abs_diff_eq!(z[0], 2.0 - 0.5 * 2.0);
        assert_abs_diff_eq!(x_next[0], 2.0 - 0.25 * 0.5 * 2.0);
    }

    #[test]
    fn stos_step_rejects_lambda_outside_unit_interval() {
        let prob = unconstrained_stos();
        assert!(prob.step(&v(&[1.0]), 0, 0.0).is_err());
        assert!(prob.step(&v(&[1.0]), 0, 1.0).is_err());
        // continuity: small lambda barely moves the point
        let (_, _, x_next) = prob.step(&v(&[1.0]), 0, 1e-9).unwrap();
        assert_abs_diff_eq!(x_next[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn stos_projection_only_fixes_target() {
        // C = 0 via zero matrices, A = 0, B = normal cone of {x = c}
        let n = 2;
        let zero_c = GradientFamily::LeastSquares(vec![crate::operators::LeastSquaresTerm::new(
            Matrix::identity(n).scale(0.0),
            Vector::zeros(n),
        )
        .unwrap()]);
        let prob = StosProblem::new(
            ResolventKind::Zero,
            ResolventKind::AffineSubspace {
                matrix: Matrix::identity(n),
                rhs: v(&[1.0, -2.0]),
            },
            zero_c,
            ScenarioSet::uniform(1).unwrap(),
            1.0,
        )
        .unwrap();
        let op = prob.operator().unwrap();
        let c = v(&[1.0, -2.0]);
        assert_abs_diff_eq!(op.residual(&c).unwrap(), 0.0, epsilon = 1e-12);
        // from any x the composite returns the target
        let image = op.apply(0, &v(&[5.0, 5.0])).unwrap();
        assert_abs_diff_eq!(image.distance(&c), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn stos_rejects_invalid_configuration() {
        // rho outside (0, 2 tau)
        assert!(StosProblem::new(
            ResolventKind::Zero,
            ResolventKind::Zero,
            GradientFamily::scalar_targets(&[0.0]).unwrap(),
            ScenarioSet::uniform(1).unwrap(),
            2.0,
        )
        .is_err());
        // B outside the affine catalog
        assert!(StosProblem::new(
            ResolventKind::Zero,
            ResolventKind::Ball {
                center: Vector::zeros(1),
                radius: 1.0
            },
            GradientFamily::scalar_targets(&[0.0]).unwrap(),
            ScenarioSet::uniform(1).unwrap(),
            0.5,
        )
        .is_err());
    }

    #[test]
    fn stos_step_consistent_with_operator_iteration() {
        let prob = catalog::lookup("stos_eqls").unwrap();
        let ProblemKind::Stos(stos) = &prob.kind else {
            panic!()
        };
        let op = stos.operator().unwrap();
        let schedule = Schedule::power_decay(0.5, 0.75).unwrap();
        let horizon = 64;
        let traj = run_skm(&op, &schedule, &prob.x0, horizon, 5, RecordFlags::default()).unwrap();

        let mut x = prob.x0.clone();
        for k in 0..horizon {
            let lambda = schedule.lambda(k).unwrap();
            let scenario = traj.drawn_scenarios()[k];
            let (_, _, next) = stos.step(&x, scenario, lambda).unwrap();
            x = next;
            let reference = traj.iterate(k + 1);
            for i in 0..x.dim() {
                assert_abs_diff_eq!(x[i], reference[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stos_reference_matches_kkt_solution() {
        let entry = catalog::lookup("stos_eqls").unwrap();
        let ProblemKind::Stos(stos) = &entry.kind else {
            panic!()
        };
        let sol = stos.solve_reference(1e-10).unwrap();
        let kkt = stos.kkt_solution().unwrap();
        assert!(
            sol.x_star.distance(&kkt) <= 1e-8,
            "distance {}",
            sol.x_star.distance(&kkt)
        );
        // the constraint holds at the solution
        let ResolventKind::AffineSubspace { matrix, rhs } = &stos.resolvent_b().kind else {
            panic!()
        };
        assert_abs_diff_eq!(
            matrix.matvec(&sol.x_star).distance(rhs),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn stos_unconstrained_reference_is_plain_minimizer() {
        let prob = StosProblem::new(
            ResolventKind::Zero,
            ResolventKind::Zero,
            GradientFamily::scalar_targets(&[1.0, 3.0]).unwrap(),
            ScenarioSet::uniform(2).unwrap(),
            0.9,
        )
        .unwrap();
        let sol = prob.solve_reference(1e-10).unwrap();
        // minimizer of the expected quadratic is the mean target
        assert_abs_diff_eq!(sol.x_star[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(prob.kkt_solution().unwrap()[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn stos_variance_bounded_by_c_spread() {
        let entry = catalog::lookup("stos_eqls").unwrap();
        let ProblemKind::Stos(stos) = &entry.kind else {
            panic!()
        };
        let known = &entry.known;
        let mean_c = stos.expected_c(&known.x_star);
        let mut spread = 0.0;
        for (i, p) in stos.scenarios().probs().iter().enumerate() {
            spread += p * stos
                .gradient_family()
                .gradient(i, &known.x_star)
                .distance_sq(&mean_c);
        }
        let bound = stos.rho() * stos.rho() * spread;
        assert!(known.sigma_star_sq <= bound + 1e-10);
    }

    #[test]
    fn lift_examples() {
        // A = 0 forces a zero certificate; the lift is the point itself
        let prob = unconstrained_stos();
        let x = prob
            .lift_zero_to_fixed_point(&v(&[0.0]), &Vector::zeros(1))
            .unwrap();
        assert_abs_diff_eq!(x[0], 0.0);
        let op = prob.operator().unwrap();
        assert_abs_diff_eq!(op.residual(&x).unwrap(), 0.0, epsilon = 1e-15);
        assert!(prob
            .lift_zero_to_fixed_point(&v(&[0.0]), &v(&[0.5]))
            .is_err());

        // interior of a box: the normal cone is {0}
        let entry = catalog::lookup("stos_eqls").unwrap();
        let ProblemKind::Stos(stos) = &entry.kind else {
            panic!()
        };
        let z = stos.kkt_solution().unwrap();
        let lifted = stos
            .lift_zero_to_fixed_point(&z, &Vector::zeros(3))
            .unwrap();
        assert_eq!(lifted, z);
        let op = stos.operator().unwrap();
        assert!(op.residual(&lifted).unwrap() <= 1e-8);
    }

    #[test]
    fn graph_defect_cases() {
        let boxk = ResolventKind::Box {
            lower: v(&[0.0, 0.0]),
            upper: v(&[1.0, 1.0]),
        };
        // interior point with zero certificate
        assert_abs_diff_eq!(
            graph_defect(&boxk, &v(&[0.5, 0.5]), &Vector::zeros(2), 1e-9).unwrap(),
            0.0
        );
        // outward normal at the upper face is valid, inward is not
        assert_abs_diff_eq!(
            graph_defect(&boxk, &v(&[1.0, 0.5]), &v(&[2.0, 0.0]), 1e-9).unwrap(),
            0.0
        );
        assert!(graph_defect(&boxk, &v(&[1.0, 0.5]), &v(&[-2.0, 0.0]), 1e-9).unwrap() > 1.0);

        let l1 = ResolventKind::L1 { weight: 2.0 };
        assert_abs_diff_eq!(
            graph_defect(&l1, &v(&[3.0]), &v(&[2.0]), 1e-9).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            graph_defect(&l1, &v(&[0.0]), &v(&[-1.5]), 1e-9).unwrap(),
            0.0
        );
        assert!(graph_defect(&l1, &v(&[0.0]), &v(&[2.5]), 1e-9).unwrap() > 0.0);

        let affine = ResolventKind::AffineSubspace {
            matrix: Matrix::from_rows(&[&[1.0, 1.0]]).unwrap(),
            rhs: v(&[1.0]),
        };
        // normals are multiples of (1, 1)
        assert_abs_diff_eq!(
            graph_defect(&affine, &v(&[0.5, 0.5]), &v(&[3.0, 3.0]), 1e-9).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert!(graph_defect(&affine, &v(&[0.5, 0.5]), &v(&[1.0, -1.0]), 1e-9).unwrap() > 1.0);
    }

    #[test]
    fn stos_operator_passes_nonexpansiveness() {
        let entry = catalog::lookup("stos_eqls").unwrap();
        let report = entry.operator.check_nonexpansive(13, 1000).unwrap();
        assert!(report.pass, "min margin {:?}", report.min_margin);
    }

    #[test]
    fn expected_step_is_stationary_at_fixed_point() {
        let entry = catalog::lookup("stos_eqls").unwrap();
        let ProblemKind::Stos(stos) = &entry.kind else {
            panic!()
        };
        let p = &entry.known.p;
        // E[y - z] = 0 at a fixed point, so the expected update stays put
        let mut expected_next = Vector::zeros(3);
        for (i, prob) in stos.scenarios().probs().iter().enumerate() {
            let (_, _, next) = stos.step(p, i, 0.5).unwrap();
            expected_next = expected_next.add(&next.scale(*prob));
        }
        assert!(expected_next.distance(p) <= 1e-8);
    }

    #[test]
    fn stos_with_l1_operator_satisfies_optimality() {
        // sparse regularization: A = subdifferential of w ||.||_1, B = 0,
        // C = stochastic quadratic gradients pulling towards two targets
        let prob = StosProblem::new(
            ResolventKind::L1 { weight: 0.3 },
            ResolventKind::Zero,
            GradientFamily::scalar_targets(&[1.0, 2.0]).unwrap(),
            ScenarioSet::uniform(2).unwrap(),
            0.8,
        )
        .unwrap();
        let sol = prob.solve_reference(1e-10).unwrap();
        // soft-threshold characterization: x* = mean target - w
        assert_abs_diff_eq!(sol.x_star[0], 1.5 - 0.3, epsilon = 1e-8);
        // -C x* is a valid subgradient certificate at x*
        let c = prob.expected_c(&sol.x_star).scale(-1.0);
        assert!(
            graph_defect(&ResolventKind::L1 { weight: 0.3 }, &sol.x_star, &c, 1e-8).unwrap()
                <= 1e-8
        );
        // and the lift reproduces the located fixed point
        let lifted = prob.lift_zero_to_fixed_point(&sol.x_star, &c).unwrap();
        assert!(lifted.distance(&sol.p) <= 1e-8);
    }

    #[test]
    fn logistic_reference_uses_gradient_descent() {
        let samples = vec![
            crate::operators::LogisticSample::new(v(&[1.0]), 1.0).unwrap(),
            crate::operators::LogisticSample::new(v(&[2.0]), -1.0).unwrap(),
        ];
        let family = GradientFamily::Logistic(samples);
        let gamma = 1.0 / family.max_curvature();
        let prob = SgdProblem::new(family, ScenarioSet::uniform(2).unwrap(), gamma).unwrap();
        let sol = prob.solve_reference(1e-9).unwrap();
        assert!(prob.expected_gradient(&sol.x_star).norm() <= 1e-9);
        let op = prob.operator().unwrap();
        assert!(op.residual(&sol.p).unwrap() <= 1e-8);
    }

    #[test]
    fn random_least_squares_instances_are_well_posed() {
        let mut rng = stream_rng(3, Stream::Probe);
        for seed in 0..3u64 {
            let prob = random_least_squares(3, 4, seed).unwrap();
            let op = prob.operator().unwrap();
            assert!(op.check_nonexpansive(seed, 300).unwrap().pass);
            let sol = prob.solve_reference(1e-9).unwrap();
            assert!(op.residual(&sol.p).unwrap() <= 1e-8);
            let x = v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0]);
            assert!(op.variance_at(&x).unwrap() >= 0.0);
        }
    }
}
