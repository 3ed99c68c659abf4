//! Command-line front end: `run`, `rates`, `verify`, and `enumerate`.
//!
//! Flags may be backed by an optional key=value config file (`--config`);
//! flags override file entries, and `SKMLAB_SEED` supplies the default base
//! seed. All emitted floats use a fixed 17-significant-digit scientific
//! format so outputs are byte-stable across runs and platforms.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::lookup;
use crate::report::InequalityReport;
use crate::rng::{mix_seed, sample_states};
use crate::skm::{
    random_index_distribution, run_skm, sample_output, theoretical_residual_bound, RecordFlags,
    Schedule,
};
use crate::verify::{
    check_decrease_inequality, check_residual_bound, check_variance_constancy,
    check_variance_transfer, check_weighted_min_vanishing, enumerate_expectations, fit_rate,
    RateFit, SequenceSpec,
};
use crate::Vector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "skm-lab",
    version,
    about = "Stochastic fixed-point iteration lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded trajectory and emit it as CSV.
    Run(RunArgs),
    /// Sweep horizons, estimate the expected residual, and fit its decay.
    Rates(RatesArgs),
    /// Run a verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Exact scenario-tree expectations for a small instance.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub problem: Option<String>,
    /// `const:<lambda0>` or `power:<lambda0>:<a>`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "K")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub record_residual: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub problem: Option<String>,
    /// Must be `const:<lambda0>`; the per-step value is `lambda0 / sqrt(K)`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "Ks", value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One of `lemmas`, `bound`, `stos`, `all`.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "K")]
    pub horizon: Option<usize>,
    /// Maximum number of scenario paths to walk.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A relaxation schedule as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Const { lambda0: f64 },
    Power { lambda0: f64, exponent: f64 },
}

impl ScheduleSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || {
            Error::Usage(format!(
                "bad schedule `{text}`; use const:<l0> or power:<l0>:<a>"
            ))
        };
        match parts.as_slice() {
            ["const", l0] => Ok(ScheduleSpec::Const {
                lambda0: l0.parse().map_err(|_| bad())?,
            }),
            ["power", l0, a] => Ok(ScheduleSpec::Power {
                lambda0: l0.parse().map_err(|_| bad())?,
                exponent: a.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    pub fn instantiate(&self, horizon: usize) -> Result<Schedule> {
        match self {
            ScheduleSpec::Const { lambda0 } => Schedule::constant_horizon(*lambda0, horizon),
            ScheduleSpec::Power { lambda0, exponent } => Schedule::power_decay(*lambda0, *exponent),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScheduleSpec::Const { lambda0 } => format!("const:{lambda0}"),
            ScheduleSpec::Power { lambda0, exponent } => format!("power:{lambda0}:{exponent}"),
        }
    }
}

/// 17 significant digits, scientific notation, locale-free.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// config file handling

#[derive(Debug, Default)]
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Usage(format!(
                    "config line {} is not key=value: `{raw}`",
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("config key `{key}` has bad value `{text}`"))),
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: &Config) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = config.parse::<u64>("seed")? {
        return Ok(seed);
    }
    match std::env::var("SKMLAB_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| Error::Usage(format!("SKMLAB_SEED has bad value `{text}`"))),
        Err(_) => Ok(0),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Usage(format!("missing --{flag}")))
}

// ---------------------------------------------------------------------------
// run

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: String,
    pub schedule: ScheduleSpec,
    pub horizon: usize,
    pub seed: u64,
    pub record_residual: bool,
}

impl RunSpec {
    fn from_args(args: &RunArgs) -> Result<Self> {
        let config = Config::load(args.config.as_deref())?;
        let problem = required(
            args.problem
                .clone()
                .or_else(|| config.get("problem").map(String::from)),
            "problem",
        )?;
        let schedule_text = required(
            args.schedule
                .clone()
                .or_else(|| config.get("schedule").map(String::from)),
            "schedule",
        )?;
        let horizon = required(args.horizon.or(config.parse("K")?), "K")?;
        let record_residual =
            args.record_residual || config.parse::<bool>("record-residual")?.unwrap_or(false);
        Ok(RunSpec {
            problem,
            schedule: ScheduleSpec::parse(&schedule_text)?,
            horizon,
            seed: resolve_seed(args.seed, &config)?,
            record_residual,
        })
    }
}

/// Execute one trajectory and render it as CSV
/// (`k,x_0,...,x_{n-1},lambda[,residual]`).
pub fn cmd_run(spec: &RunSpec) -> Result<String> {
    if spec.horizon == 0 {
        return Err(Error::Usage("K must be at least 1".into()));
    }
    let entry = lookup(&spec.problem)?;
    let schedule = spec.schedule.instantiate(spec.horizon)?;
    let traj = run_skm(
        &entry.operator,
        &schedule,
        &entry.x0,
        spec.horizon,
        spec.seed,
        RecordFlags {
            residuals: spec.record_residual,
        },
    )?;
    if traj.iterates().iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure(
            "trajectory left the finite range".into(),
        ));
    }

    let dim = entry.operator.dim();
    let mut csv = String::from("k");
    for i in 0..dim {
        csv.push_str(&format!(",x_{i}"));
    }
    csv.push_str(",lambda");
    if spec.record_residual {
        csv.push_str(",residual");
    }
    csv.push('\n');
    for (k, x) in traj.iterates().iter().enumerate() {
        csv.push_str(&k.to_string());
        for i in 0..dim {
            csv.push(',');
            csv.push_str(&fmt_f64(x[i]));
        }
        csv.push(',');
        if k < spec.horizon {
            csv.push_str(&fmt_f64(schedule.lambda(k)?));
        }
        if let Some(residuals) = traj.residuals() {
            csv.push(',');
            csv.push_str(&fmt_f64(residuals[k]));
        }
        csv.push('\n');
    }
    Ok(csv)
}

// ---------------------------------------------------------------------------
// rates

#[derive(Debug, Clone)]
pub struct RatesSpec {
    pub problem: String,
    pub lambda0: f64,
    pub horizons: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl RatesSpec {
    fn from_args(args: &RatesArgs) -> Result<Self> {
        let config = Config::load(args.config.as_deref())?;
        let problem = required(
            args.problem
                .clone()
                .or_else(|| config.get("problem").map(String::from)),
            "problem",
        )?;
        let schedule_text = required(
            args.schedule
                .clone()
                .or_else(|| config.get("schedule").map(String::from)),
            "schedule",
        )?;
        let horizons = match &args.horizons {
            Some(h) => h.clone(),
            None => match config.get("Ks") {
                Some(text) => text
                    .split(',')
                    .map(|t| {
                        t.trim().parse().map_err(|_| {
                            Error::Usage(format!("config key `Ks` has bad entry `{t}`"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?,
                None => return Err(Error::Usage("missing --Ks".into())),
            },
        };
        let reps = required(args.reps.or(config.parse("reps")?), "reps")?;
        let lambda0 = match ScheduleSpec::parse(&schedule_text)? {
            ScheduleSpec::Const { lambda0 } => lambda0,
            ScheduleSpec::Power { .. } => {
                return Err(Error::Usage(
                    "rates sweeps need a horizon-scaled constant schedule (const:<lambda0>)".into(),
                ))
            }
        };
        Ok(RatesSpec {
            problem,
            lambda0,
            horizons,
            reps,
            seed: resolve_seed(args.seed, &config)?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesRow {
    pub horizon: usize,
    pub mean_residual: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug)]
pub struct RatesOutput {
    pub rows: Vec<RatesRow>,
    pub fit: RateFit,
    pub csv: String,
}

/// Seeded replication sweep: for each horizon, run `reps` trajectories with
/// the horizon-scaled constant schedule, sample the randomized output index
/// per replication, and estimate the expected residual with its standard
/// error. The bound column is the square root of the closed-form bound on
/// the squared residual.
pub fn cmd_rates(spec: &RatesSpec) -> Result<RatesOutput> {
    if spec.horizons.len() < 3 {
        return Err(Error::Usage("rates sweeps need at least 3 horizons".into()));
    }
    if spec.reps < 30 {
        return Err(Error::Usage(
            "rates sweeps need at least 30 replications".into(),
        ));
    }
    let entry = lookup(&spec.problem)?;
    let dist0_sq = entry.known.dist0_sq(&entry.x0);

    let mut rows = Vec::with_capacity(spec.horizons.len());
    for &horizon in &spec.horizons {
        let schedule = Schedule::constant_horizon(spec.lambda0, horizon)?;
        let dist = random_index_distribution(&schedule, horizon)?;
        // replication results live in a slot per index, so aggregation order
        // is fixed regardless of how the runs execute
        let mut residuals = vec![0.0; spec.reps];
        for (i, slot) in residuals.iter_mut().enumerate() {
            let rep_seed = mix_seed(spec.seed, i as u64);
            let traj = run_skm(
                &entry.operator,
                &schedule,
                &entry.x0,
                horizon,
                rep_seed,
                RecordFlags::default(),
            )?;
            let (_, x_out) = sample_output(&traj, &dist, rep_seed)?;
            *slot = entry.operator.residual(&x_out)?;
        }
        let mean = residuals.iter().sum::<f64>() / spec.reps as f64;
        let var =
            residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (spec.reps as f64 - 1.0);
        let stderr = (var / spec.reps as f64).sqrt();
        let bound =
            theoretical_residual_bound(&schedule, horizon, dist0_sq, entry.known.sigma_star_sq)?
                .sqrt();
        rows.push(RatesRow {
            horizon,
            mean_residual: mean,
            stderr,
            bound,
        });
    }

    let means: Vec<f64> = rows.iter().map(|r| r.mean_residual).collect();
    let fit = fit_rate(&spec.horizons, &means)?;

    let mut csv = String::from("K,mean_residual,stderr,bound\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.horizon,
            fmt_f64(row.mean_residual),
            fmt_f64(row.stderr),
            fmt_f64(row.bound)
        ));
    }
    Ok(RatesOutput { rows, fit, csv })
}

// ---------------------------------------------------------------------------
// verify

/// Verification report: tool version, an echo of the request, and one record
/// per check.
#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub version: String,
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<InequalityReport>,
    pub overall_pass: bool,
}

fn renamed(mut report: InequalityReport, name: String) -> InequalityReport {
    report.name = name;
    report
}

fn equality_report(name: String, left: f64, right: f64, tol: f64) -> InequalityReport {
    InequalityReport::from_margins(name, vec![tol - (left - right).abs()], 0.0)
}

fn lemma_checks(seed: u64, checks: &mut Vec<InequalityReport>) -> Result<()> {
    for name in ["sgd1d", "translation"] {
        let entry = lookup(name)?;
        let states = sample_states(entry.operator.dim(), 1000, 5.0, seed);
        for lambda in [0.1, 0.5, 0.9] {
            let report = check_decrease_inequality(
                &entry.operator,
                &entry.known.p,
                &states,
                lambda,
                entry.known.sigma_star_sq,
            )?;
            checks.push(renamed(
                report,
                format!("decrease_inequality/{name}/lambda={lambda}"),
            ));
        }
    }

    let entry = lookup("sgd1d")?;
    let points = sample_states(1, 1000, 5.0, mix_seed(seed, 1));
    let report = check_variance_transfer(
        &entry.operator,
        &entry.known.p,
        entry.known.sigma_star_sq,
        &points,
    )?;
    checks.push(renamed(report, "variance_transfer/sgd1d".into()));

    // gamma^2 E||grad f_i(x*)||^2 must reproduce the operator variance
    let crate::problems::ProblemKind::Sgd(prob) = &entry.kind else {
        return Err(Error::invalid("sgd1d is not an sgd problem"));
    };
    let mut second_moment = 0.0;
    for (i, p) in prob.scenarios().probs().iter().enumerate() {
        second_moment += p * prob.family().gradient(i, &entry.known.x_star).norm_sq();
    }
    checks.push(equality_report(
        "variance_identity/sgd1d".into(),
        entry.known.sigma_star_sq,
        prob.gamma() * prob.gamma() * second_moment,
        1e-10,
    ));

    let entry = lookup("sgd2dline")?;
    let line_points: Vec<Vector> = (0..10)
        .map(|i| Vector::from_slice(&[0.0, -4.5 + i as f64]))
        .collect::<Result<_>>()?;
    let report = check_variance_constancy(&entry.operator, &line_points)?;
    checks.push(renamed(report, "variance_constancy/sgd2dline".into()));
    Ok(())
}

fn bound_checks(checks: &mut Vec<InequalityReport>) -> Result<()> {
    // deterministic sign flip with per-step lambda = 1/2
    let entry = lookup("negate")?;
    let schedule = Schedule::constant_value(0.5, 2)?;
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        2,
        &entry.known.p,
        1_000,
    )?;
    let report = check_residual_bound(&e, &schedule, entry.known.dist0_sq(&entry.x0), 0.0)?;
    checks.push(renamed(report, "residual_bound/negate/K=2".into()));

    let entry = lookup("sgd1d")?;
    let schedule = Schedule::constant_horizon(0.5, 8)?;
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        8,
        &entry.known.p,
        1_000,
    )?;
    let report = check_residual_bound(
        &e,
        &schedule,
        entry.known.dist0_sq(&entry.x0),
        entry.known.sigma_star_sq,
    )?;
    checks.push(renamed(report, "residual_bound/sgd1d/K=8".into()));

    let entry = lookup("translation")?;
    let schedule = Schedule::constant_horizon(0.5, 3)?;
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        3,
        &entry.known.p,
        1_000,
    )?;
    let report = check_residual_bound(
        &e,
        &schedule,
        entry.known.dist0_sq(&entry.x0),
        entry.known.sigma_star_sq,
    )?;
    checks.push(renamed(report, "residual_bound/translation/K=3".into()));
    Ok(())
}

fn stos_checks(seed: u64, checks: &mut Vec<InequalityReport>) -> Result<()> {
    let entry = lookup("stos_eqls")?;
    let crate::problems::ProblemKind::Stos(stos) = &entry.kind else {
        return Err(Error::invalid("stos_eqls is not a splitting problem"));
    };

    let report = entry.operator.check_nonexpansive(seed, 1000)?;
    checks.push(renamed(report, "nonexpansive/stos_eqls".into()));

    // the split three-line step must reproduce the operator iteration
    let schedule = Schedule::power_decay(0.5, 0.75)?;
    let horizon = 100;
    let traj = run_skm(
        &entry.operator,
        &schedule,
        &entry.x0,
        horizon,
        seed,
        RecordFlags::default(),
    )?;
    let mut x = entry.x0.clone();
    let mut margins = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let (_, _, next) = stos.step(&x, traj.drawn_scenarios()[k], schedule.lambda(k)?)?;
        x = next;
        let gap = (0..x.dim())
            .map(|i| (x[i] - traj.iterate(k + 1)[i]).abs())
            .fold(0.0_f64, f64::max);
        margins.push(-gap);
    }
    checks.push(InequalityReport::from_margins(
        "consistency/stos_eqls",
        margins,
        1e-12,
    ));

    // forward link: lift the closed-form zero with its interior certificate
    let z = stos.kkt_solution()?;
    let lifted = stos.lift_zero_to_fixed_point(&z, &Vector::zeros(stos.dim()))?;
    let residual = entry.operator.residual(&lifted)?;
    checks.push(InequalityReport::from_margins(
        "link_forward/stos_eqls",
        vec![1e-8 - residual],
        0.0,
    ));

    // reverse link: the resolvent image of the located fixed point is a zero
    // of the inclusion, certified coordinate-wise
    let sol = stos.solve_reference(1e-10)?;
    let v = stos.resolvent_a().apply(&sol.p)?;
    let a_cert = sol.p.sub(&v).scale(1.0 / stos.rho());
    let b_cert = a_cert.scale(-1.0).sub(&stos.expected_c(&v));
    let defect_a = crate::problems::graph_defect(&stos.resolvent_a().kind, &v, &a_cert, 1e-6)?;
    let defect_b = crate::problems::graph_defect(&stos.resolvent_b().kind, &v, &b_cert, 1e-6)?;
    checks.push(InequalityReport::from_margins(
        "link_reverse/stos_eqls",
        vec![1e-9 - v.distance(&z), 1e-8 - defect_a, 1e-8 - defect_b],
        0.0,
    ));

    // operator variance at the fixed point is controlled by the spread of C
    let mean_c = stos.expected_c(&sol.x_star);
    let mut spread = 0.0;
    for (i, p) in stos.scenarios().probs().iter().enumerate() {
        spread += p * stos
            .gradient_family()
            .gradient(i, &sol.x_star)
            .distance_sq(&mean_c);
    }
    let bound = stos.rho() * stos.rho() * spread + 1e-10;
    checks.push(InequalityReport::from_margins(
        "variance_bound/stos_eqls",
        vec![bound - sol.sigma_star_sq],
        0.0,
    ));
    Ok(())
}

fn small_o_checks(checks: &mut Vec<InequalityReport>) -> Result<()> {
    let harmonic = SequenceSpec::new(1.0, 1.0)?;
    let report = check_weighted_min_vanishing(&harmonic, &harmonic, 100_000)?;
    checks.push(renamed(report, "weighted_min_vanishing/harmonic".into()));
    Ok(())
}

/// Run a named verification suite over the built-in catalog.
pub fn cmd_verify(suite: &str, seed: u64) -> Result<ReportDocument> {
    let mut checks = Vec::new();
    match suite {
        "lemmas" => lemma_checks(seed, &mut checks)?,
        "bound" => bound_checks(&mut checks)?,
        "stos" => stos_checks(seed, &mut checks)?,
        "all" => {
            lemma_checks(seed, &mut checks)?;
            bound_checks(&mut checks)?;
            stos_checks(seed, &mut checks)?;
            small_o_checks(&mut checks)?;
            for name in ["sgd1d", "translation", "sgd2dline"] {
                let entry = lookup(name)?;
                let report = entry.operator.check_nonexpansive(seed, 1000)?;
                checks.push(renamed(report, format!("nonexpansive/{name}")));
            }
        }
        other => return Err(Error::Usage(format!("unknown suite `{other}`"))),
    }
    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(ReportDocument {
        version: env!("CARGO_PKG_VERSION").to_string(),
        suite: suite.to_string(),
        seed,
        checks,
        overall_pass,
    })
}

// ---------------------------------------------------------------------------
// enumerate

#[derive(Debug, Clone)]
pub struct EnumerateSpec {
    pub problem: String,
    pub schedule: ScheduleSpec,
    pub horizon: usize,
    pub budget: u64,
}

impl EnumerateSpec {
    fn from_args(args: &EnumerateArgs) -> Result<Self> {
        let config = Config::load(args.config.as_deref())?;
        let problem = required(
            args.problem
                .clone()
                .or_else(|| config.get("problem").map(String::from)),
            "problem",
        )?;
        let schedule_text = required(
            args.schedule
                .clone()
                .or_else(|| config.get("schedule").map(String::from)),
            "schedule",
        )?;
        let horizon = required(args.horizon.or(config.parse("K")?), "K")?;
        let budget = args.budget.or(config.parse("budget")?).unwrap_or(1_000_000);
        Ok(EnumerateSpec {
            problem,
            schedule: ScheduleSpec::parse(&schedule_text)?,
            horizon,
            budget,
        })
    }
}

#[derive(Debug, Serialize)]
struct EnumerationDocument {
    problem: String,
    schedule: String,
    #[serde(rename = "K")]
    horizon: usize,
    path_count: u64,
    total_probability: f64,
    dist_sq: Vec<f64>,
    residual_sq: Vec<f64>,
    expected_residual_sq_at_output: f64,
    theoretical_bound: f64,
    margin: f64,
}

/// Exact expectations plus the residual-bound margin, as JSON.
pub fn cmd_enumerate(spec: &EnumerateSpec) -> Result<String> {
    let entry = lookup(&spec.problem)?;
    let schedule = spec.schedule.instantiate(spec.horizon)?;
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        spec.horizon,
        &entry.known.p,
        spec.budget,
    )?;
    let bound = theoretical_residual_bound(
        &schedule,
        spec.horizon,
        entry.known.dist0_sq(&entry.x0),
        entry.known.sigma_star_sq,
    )?;
    let doc = EnumerationDocument {
        problem: entry.name.clone(),
        schedule: spec.schedule.label(),
        horizon: spec.horizon,
        path_count: e.path_count,
        total_probability: e.total_probability,
        dist_sq: e.dist_sq.clone(),
        residual_sq: e.residual_sq.clone(),
        expected_residual_sq_at_output: e.expected_residual_sq_at_output,
        theoretical_bound: bound,
        margin: bound - e.expected_residual_sq_at_output,
    };
    Ok(serde_json::to_string_pretty(&doc).expect("report serialization") + "\n")
}

// ---------------------------------------------------------------------------
// dispatch

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Usage(_)
        | Error::InvalidParameter(_)
        | Error::RejectedInput(_)
        | Error::DimensionMismatch { .. }
        | Error::ScenarioOutOfRange { .. }
        | Error::HorizonMismatch { .. } => EXIT_USAGE,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::OracleFailure(_) | Error::NumericFailure(_) | Error::Io(_) => EXIT_NUMERIC,
    }
}

fn run_command(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(args) => {
            let spec = RunSpec::from_args(args)?;
            let csv = cmd_run(&spec)?;
            write_output(args.out.as_deref(), &csv)?;
            Ok(EXIT_OK)
        }
        Command::Rates(args) => {
            let spec = RatesSpec::from_args(args)?;
            let output = cmd_rates(&spec)?;
            write_output(args.out.as_deref(), &output.csv)?;
            println!(
                "rate fit: slope {} (r^2 {})",
                fmt_f64(output.fit.slope),
                fmt_f64(output.fit.r_squared)
            );
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let config = Config::load(args.config.as_deref())?;
            let suite = required(
                args.suite
                    .clone()
                    .or_else(|| config.get("suite").map(String::from)),
                "suite",
            )?;
            let seed = resolve_seed(args.seed, &config)?;
            let doc = cmd_verify(&suite, seed)?;
            let json = serde_json::to_string_pretty(&doc).expect("report serialization") + "\n";
            write_output(args.out.as_deref(), &json)?;
            Ok(if doc.overall_pass {
                EXIT_OK
            } else {
                EXIT_VERIFICATION_FAILED
            })
        }
        Command::Enumerate(args) => {
            let spec = EnumerateSpec::from_args(args)?;
            let json = cmd_enumerate(&spec)?;
            write_output(args.out.as_deref(), &json)?;
            Ok(EXIT_OK)
        }
    }
}

/// Execute a parsed command line and return the process exit code.
pub fn dispatch(cli: &Cli) -> i32 {
    match run_command(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
