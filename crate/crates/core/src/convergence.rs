//! Families of runs with increasing deconvolution order `N` and a
//! vanishing diffusivity `ε(N)`, compared against the largest-`N` member.
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::diagnostics::{
    accumulate, limit_energy_inequality, limit_pressure, mean_equation_residual, EnergyRecord,
    LimitInequality, TimeNorm,
};
use crate::error::{AdmError, Result};
use crate::filter::{deconv_symbol, DeconvolutionSpec};
use crate::integrator::{integrate, Observer, SolverState, StepControl};
use crate::rhs::ModelParams;
use crate::spectral::{sobolev_norm, SpectralField, SpectralScalarField, SpectralVectorField};

/// Diffusivity schedule `N ↦ ε(N)`.
pub trait EpsilonRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn epsilon(&self, order: usize) -> f64;
}

/// `ε(N) = ε₀ / (N + 1)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseLinear {
    pub eps0: f64,
}

impl EpsilonRule for InverseLinear {
    fn name(&self) -> &'static str {
        "inverse-linear"
    }

    fn epsilon(&self, order: usize) -> f64 {
        self.eps0 / (order as f64 + 1.0)
    }
}

/// `ε(N) = ε₀ / (N + 1)^p`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw {
    pub eps0: f64,
    pub exponent: f64,
}

impl EpsilonRule for PowerLaw {
    fn name(&self) -> &'static str {
        "power-law"
    }

    fn epsilon(&self, order: usize) -> f64 {
        self.eps0 / (order as f64 + 1.0).powf(self.exponent)
    }
}

pub const DEFAULT_EPS0: f64 = 0.5;
pub const DEFAULT_RULE: &str = "inverse-linear";

/// Parameters shared by the registered rules; unused fields are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleParams {
    pub eps0: f64,
    pub exponent: Option<f64>,
}

impl Default for RuleParams {
    fn default() -> Self {
        Self {
            eps0: DEFAULT_EPS0,
            exponent: None,
        }
    }
}

type RuleFactory = fn(&RuleParams) -> Result<Arc<dyn EpsilonRule>>;

fn check_eps0(eps0: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(AdmError::InvalidParameter {
            name: "eps0",
            value: eps0,
            range: "0 < ε₀ < 1",
        });
    }
    Ok(())
}

fn make_inverse_linear(p: &RuleParams) -> Result<Arc<dyn EpsilonRule>> {
    check_eps0(p.eps0)?;
    Ok(Arc::new(InverseLinear { eps0: p.eps0 }))
}

fn make_power_law(p: &RuleParams) -> Result<Arc<dyn EpsilonRule>> {
    check_eps0(p.eps0)?;
    let exponent = p.exponent.unwrap_or(1.0);
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(AdmError::InvalidParameter {
            name: "exponent",
            value: exponent,
            range: "exponent > 0",
        });
    }
    Ok(Arc::new(PowerLaw {
        eps0: p.eps0,
        exponent,
    }))
}

/// Name-keyed registry of ε schedules.
pub struct RuleRegistry {
    factories: BTreeMap<&'static str, RuleFactory>,
}

impl Default for RuleRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("inverse-linear", make_inverse_linear);
        r.register("power-law", make_power_law);
        r
    }
}

impl RuleRegistry {
    pub fn register(&mut self, name: &'static str, factory: RuleFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &RuleParams) -> Result<Arc<dyn EpsilonRule>> {
        let factory = self.factories.get(name).ok_or_else(|| AdmError::UnknownName {
            kind: "epsilon rule",
            name: name.to_string(),
        })?;
        factory(params)
    }
}

/// Relative errors `‖D_N p − A p‖_s / ‖A p‖_s` for each order.
pub fn operator_convergence<F: SpectralField>(
    alpha: f64,
    orders: &[usize],
    probe: &F,
    s: f64,
) -> Result<Vec<f64>> {
    let spec = DeconvolutionSpec::new(probe.grid(), alpha, 0)?;
    let grid = probe.grid().clone();
    let weight = |slot: usize| {
        let k2 = grid.k_sq(slot);
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(s)
        }
    };
    let reference = probe
        .weighted_norm_sq(|slot| weight(slot) * spec.a_symbol(slot).powi(2))
        .sqrt();
    Ok(orders
        .iter()
        .map(|&n| {
            let err = probe
                .weighted_norm_sq(|slot| {
                    let k2 = grid.k_sq(slot);
                    let gap = deconv_symbol(alpha, n, k2) - spec.a_symbol(slot);
                    weight(slot) * gap * gap
                })
                .sqrt();
            if reference == 0.0 {
                0.0
            } else {
                err / reference
            }
        })
        .collect())
}

/// Everything shared by the members of a family.
#[derive(Clone, Debug)]
pub struct FamilyPlan {
    pub alpha: f64,
    pub nu: f64,
    pub orders: Vec<usize>,
    pub rule: Arc<dyn EpsilonRule>,
    pub u0: SpectralVectorField,
    pub theta0: SpectralScalarField,
    pub control: StepControl,
    /// Upper bound on concurrently running members; 0 means one per member.
    pub workers: usize,
    /// Accepts repeated orders (bit-for-bit reproducibility checks).
    pub allow_degenerate: bool,
}

impl FamilyPlan {
    pub fn new(
        alpha: f64,
        nu: f64,
        orders: Vec<usize>,
        rule: Arc<dyn EpsilonRule>,
        u0: SpectralVectorField,
        theta0: SpectralScalarField,
        control: StepControl,
    ) -> Self {
        Self {
            alpha,
            nu,
            orders,
            rule,
            u0,
            theta0,
            control,
            workers: 0,
            allow_degenerate: false,
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.orders.iter().map(|&n| self.rule.epsilon(n)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(AdmError::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                range: "α > 0",
            });
        }
        if self.allow_degenerate {
            if self.orders.is_empty() || self.orders.windows(2).any(|w| w[1] < w[0]) {
                return Err(AdmError::InvalidPlan(
                    "orders must be non-empty and non-decreasing".into(),
                ));
            }
        } else {
            if self.orders.len() < 3 {
                return Err(AdmError::InvalidPlan(format!(
                    "need at least 3 orders, got {}",
                    self.orders.len()
                )));
            }
            if self.orders.windows(2).any(|w| w[1] <= w[0]) {
                return Err(AdmError::InvalidPlan(format!(
                    "orders must be strictly increasing: {:?}",
                    self.orders
                )));
            }
            let eps = self.epsilons();
            if eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(AdmError::InvalidPlan(
                    "epsilon rule must be strictly decreasing in N".into(),
                ));
            }
        }
        for (&n, e) in self.orders.iter().zip(self.epsilons()) {
            if !(e > 0.0 && e < 1.0) {
                return Err(AdmError::InvalidPlan(format!(
                    "epsilon({n}) = {e} outside 0 < ε < 1"
                )));
            }
        }
        if self.u0.grid() != self.theta0.grid() {
            return Err(AdmError::GridMismatch);
        }
        self.control.validate()
    }
}

/// Time-aggregated residuals of the mean equations for one member.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResidualSummary {
    /// `‖r_w‖_{L²(I;H₋₁)}`
    pub momentum_l2: f64,
    pub momentum_max: f64,
    /// `‖r_ρ‖_{L²(I;H₋₁)}`
    pub density_l2: f64,
    pub density_max: f64,
}

/// Differences `member − reference` over the shared sample times.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairDifference {
    pub w_h1_l2: f64,
    pub w_h1_linf: f64,
    pub w_h1_l4: f64,
    pub rho_l2_l2: f64,
}

/// One member run and its sampled trajectory.
#[derive(Clone, Debug)]
pub struct MemberRun {
    pub order: usize,
    pub epsilon: f64,
    pub steps: usize,
    pub records: Vec<EnergyRecord>,
    pub samples: Vec<SolverState>,
    pub residuals: ResidualSummary,
    /// `‖ρ_N‖_{L²(I;L²)}`
    pub rho_l2_l2: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub orders: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `H¹` operator errors of the initial velocity, per order.
    pub operator_errors: Vec<f64>,
    /// Per order; the reference (last) member differs from itself by zero.
    pub pair_differences: Vec<PairDifference>,
    pub limit_residuals: Vec<ResidualSummary>,
    /// Limit energy inequality evaluated on the reference member.
    pub limit_inequality: Option<LimitInequality>,
    /// `None` for members that failed.
    pub members: Vec<Option<MemberRun>>,
    pub complete: bool,
}

/// A family where at least one member failed.
#[derive(Debug)]
pub struct IncompleteFamily {
    pub report: ConvergenceReport,
    pub failures: Vec<(usize, AdmError)>,
}

impl fmt::Display for IncompleteFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family incomplete:")?;
        for (n, e) in &self.failures {
            write!(f, " [N = {n}: {e}]")?;
        }
        Ok(())
    }
}

impl std::error::Error for IncompleteFamily {}

fn run_member(plan: &FamilyPlan, order: usize) -> Result<MemberRun> {
    let epsilon = plan.rule.epsilon(order);
    let spec = DeconvolutionSpec::new(plan.u0.grid(), plan.alpha, order)?;
    let params = ModelParams::new(plan.nu, epsilon, spec)?;
    let state = SolverState::init(&plan.u0, &plan.theta0, params)?;
    let mut samples = Vec::new();
    let mut collect = |_: usize, s: &SolverState, _: &EnergyRecord| -> Result<()> {
        samples.push(s.clone());
        Ok(())
    };
    let observers: &mut [&mut dyn Observer] = &mut [&mut collect];
    let run = integrate(state, &plan.control, observers).map_err(|a| a.error)?;

    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let mut r_w = Vec::with_capacity(samples.len());
    let mut r_rho = Vec::with_capacity(samples.len());
    let mut rho_norms = Vec::with_capacity(samples.len());
    for s in &samples {
        let q = limit_pressure(s)?;
        let (a, b) = mean_equation_residual(s, &q)?;
        r_w.push(a);
        r_rho.push(b);
        rho_norms.push(sobolev_norm(&s.rho, 0.0));
    }
    let residuals = ResidualSummary {
        momentum_l2: accumulate(&times, &r_w, TimeNorm::Lp(2.0)),
        momentum_max: accumulate(&times, &r_w, TimeNorm::Sup),
        density_l2: accumulate(&times, &r_rho, TimeNorm::Lp(2.0)),
        density_max: accumulate(&times, &r_rho, TimeNorm::Sup),
    };
    Ok(MemberRun {
        order,
        epsilon,
        steps: run.steps,
        records: run.records,
        rho_l2_l2: accumulate(&times, &rho_norms, TimeNorm::Lp(2.0)),
        samples,
        residuals,
    })
}

/// Space-time differences of two trajectories sampled at identical times.
pub fn pair_difference(a: &[SolverState], b: &[SolverState]) -> Result<PairDifference> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.time != y.time) {
        return Err(AdmError::InvalidPlan(
            "trajectories are not sampled at identical times".into(),
        ));
    }
    let times: Vec<f64> = a.iter().map(|s| s.time).collect();
    let mut w = Vec::with_capacity(a.len());
    let mut rho = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        w.push(sobolev_norm(&(&x.w - &y.w), 1.0));
        rho.push(sobolev_norm(&(&x.rho - &y.rho), 0.0));
    }
    Ok(PairDifference {
        w_h1_l2: accumulate(&times, &w, TimeNorm::Lp(2.0)),
        w_h1_linf: accumulate(&times, &w, TimeNorm::Sup),
        w_h1_l4: accumulate(&times, &w, TimeNorm::Lp(4.0)),
        rho_l2_l2: accumulate(&times, &rho, TimeNorm::Lp(2.0)),
    })
}

/// Runs every member (in parallel, at most `plan.workers` at a time) and
/// reduces the results against the largest-order member.
pub fn run_family(plan: &FamilyPlan) -> std::result::Result<ConvergenceReport, Box<IncompleteFamily>> {
    let mut report = ConvergenceReport {
        alpha: plan.alpha,
        orders: plan.orders.clone(),
        epsilons: plan.epsilons(),
        operator_errors: Vec::new(),
        pair_differences: Vec::new(),
        limit_residuals: Vec::new(),
        limit_inequality: None,
        members: Vec::new(),
        complete: false,
    };
    let fail = |report: ConvergenceReport, failures| Box::new(IncompleteFamily { report, failures });
    if let Err(e) = plan.validate() {
        let n = plan.orders.last().copied().unwrap_or(0);
        return Err(fail(report, vec![(n, e)]));
    }
    match operator_convergence(plan.alpha, &plan.orders, &plan.u0, 1.0) {
        Ok(errors) => report.operator_errors = errors,
        Err(e) => return Err(fail(report, vec![(plan.orders[0], e)])),
    }

    let workers = if plan.workers == 0 {
        plan.orders.len()
    } else {
        plan.workers
    };
    let outcomes: Vec<Result<MemberRun>> = match rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
    {
        Ok(pool) => pool.install(|| {
            plan.orders
                .par_iter()
                .map(|&n| run_member(plan, n))
                .collect()
        }),
        Err(_) => plan.orders.iter().map(|&n| run_member(plan, n)).collect(),
    };

    let mut failures = Vec::new();
    for (&n, outcome) in plan.orders.iter().zip(outcomes) {
        match outcome {
            Ok(m) => report.members.push(Some(m)),
            Err(e) => {
                failures.push((n, e));
                report.members.push(None);
            }
        }
    }
    report.limit_residuals = report
        .members
        .iter()
        .map(|m| m.as_ref().map(|m| m.residuals).unwrap_or_default())
        .collect();
    if !failures.is_empty() {
        return Err(fail(report, failures));
    }

    let reduced = {
        let reference = report.members.last().and_then(|m| m.as_ref()).expect("non-empty");
        reduce(&report.members, reference, plan.nu)
    };
    let (diffs, inequality) = match reduced {
        Ok(r) => r,
        Err(failure) => return Err(fail(report, vec![failure])),
    };
    report.pair_differences = diffs;
    report.limit_inequality = Some(inequality);
    report.complete = true;
    Ok(report)
}

type Reduction = (Vec<PairDifference>, LimitInequality);

fn reduce(
    members: &[Option<MemberRun>],
    reference: &MemberRun,
    nu: f64,
) -> std::result::Result<Reduction, (usize, AdmError)> {
    let diffs = members
        .iter()
        .flatten()
        .map(|m| pair_difference(&m.samples, &reference.samples).map_err(|e| (m.order, e)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let inequality =
        limit_energy_inequality(&reference.samples, nu).map_err(|e| (reference.order, e))?;
    Ok((diffs, inequality))
}

/// Outcome of [`cauchy_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct CauchySummary {
    pub passed: bool,
    pub differences: Vec<f64>,
    pub summary: String,
}

/// True iff `differences` is strictly decreasing and its last entry is
/// below `tolerance`.
pub fn is_cauchy(differences: &[f64], tolerance: f64) -> CauchySummary {
    let decreasing = differences.windows(2).all(|w| w[1] < w[0]);
    let last = differences.last().copied().unwrap_or(0.0);
    let passed = decreasing && last < tolerance;
    let summary = if passed {
        format!("strictly decreasing, last difference {last:.3e} < {tolerance:.3e}")
    } else if !decreasing {
        format!("differences not strictly decreasing: {differences:?}")
    } else {
        format!("last difference {last:.3e} not below {tolerance:.3e}")
    };
    CauchySummary {
        passed,
        differences: differences.to_vec(),
        summary,
    }
}

/// Applies [`is_cauchy`] to the `L²(I;H¹)` velocity differences of every
/// non-reference member.
pub fn cauchy_check(report: &ConvergenceReport, tolerance: f64) -> Result<CauchySummary> {
    if !report.complete || report.pair_differences.len() != report.orders.len() {
        return Err(AdmError::IncompleteReport);
    }
    let n = report.pair_differences.len();
    let diffs: Vec<f64> = report.pair_differences[..n - 1]
        .iter()
        .map(|d| d.w_h1_l2)
        .collect();
    Ok(is_cauchy(&diffs, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::gap_ratio;
    use crate::spectral::TorusGrid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI, 8).unwrap()
    }

    #[test]
    fn registry_builds_rules() {
        let reg = RuleRegistry::default();
        assert_eq!(reg.names(), vec!["inverse-linear", "power-law"]);
        let r = reg.build(DEFAULT_RULE, &RuleParams::default()).unwrap();
        assert_eq!(r.epsilon(0), 0.5);
        assert_eq!(r.epsilon(4), 0.1);
        let p = reg
            .build("power-law", &RuleParams { eps0: 0.5, exponent: Some(2.0) })
            .unwrap();
        assert_eq!(p.epsilon(1), 0.125);
        assert!(matches!(
            reg.build("nope", &RuleParams::default()),
            Err(AdmError::UnknownName { .. })
        ));
        assert!(reg.build("inverse-linear", &RuleParams { eps0: 1.5, exponent: None }).is_err());
    }

    #[test]
    fn single_mode_operator_ratio() {
        let g = grid();
        let probe = SpectralScalarField::from_modes(&g, &[([1, 0, 0], Complex64::new(1.0, 0.0))]);
        let orders: Vec<usize> = (0..=30).collect();
        let errs = operator_convergence(1.0, &orders, &probe, 1.0).unwrap();
        for w in errs.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-10);
        }
        let big = operator_convergence(1.0, &[2000], &probe, 0.0).unwrap();
        assert_eq!(big, vec![0.0]);
    }

    #[test]
    fn multi_mode_tail_follows_highest_mode() {
        let g = grid();
        let probe = SpectralScalarField::from_modes(
            &g,
            &[
                ([1, 0, 0], Complex64::new(1.0, 0.0)),
                ([2, 1, 0], Complex64::new(0.0, 0.5)),
            ],
        );
        let errs = operator_convergence(1.0, &[60, 61], &probe, 0.0).unwrap();
        let ratio = gap_ratio(1.0, 5.0);
        assert!((errs[1] / errs[0] - ratio).abs() < 1e-6);
    }

    #[test]
    fn plan_validation() {
        let g = grid();
        let rule = RuleRegistry::default().build(DEFAULT_RULE, &RuleParams::default()).unwrap();
        let mut plan = FamilyPlan::new(
            1.0,
            0.1,
            vec![5, 5, 5],
            rule,
            SpectralVectorField::zeros(&g),
            SpectralScalarField::zeros(&g),
            StepControl::new(0.01, 0.02),
        );
        assert!(matches!(plan.validate(), Err(AdmError::InvalidPlan(_))));
        assert!(run_family(&plan).is_err());
        plan.orders = vec![1, 2];
        assert!(plan.validate().is_err());
        plan.orders = vec![1, 2, 3];
        assert!(plan.validate().is_ok());
        plan.orders = vec![3, 3];
        plan.allow_degenerate = true;
        assert!(plan.validate().is_ok());
    }

    #[test]
    fn cauchy_definition() {
        assert!(is_cauchy(&[1.0, 0.5, 0.1], 0.2).passed);
        assert!(!is_cauchy(&[0.3, 0.3, 0.3], 1.0).passed);
        assert!(!is_cauchy(&[1.0, 0.5, 0.3], 0.2).passed);
        // symbol-gap predictor: max_k gap_N(k) over |k|² ≤ 4 at α = 1
        let model: Vec<f64> = [2usize, 5, 10, 20]
            .iter()
            .map(|&n| (1.0 + 4.0) * gap_ratio(1.0, 4.0).powi(n as i32 + 1))
            .collect();
        assert!(is_cauchy(&model, 0.1).passed);
    }

    #[test]
    fn incomplete_report_rejected() {
        let report = ConvergenceReport {
            alpha: 1.0,
            orders: vec![1, 2, 3],
            epsilons: vec![0.25, 0.16, 0.125],
            operator_errors: vec![],
            pair_differences: vec![],
            limit_residuals: vec![],
            limit_inequality: None,
            members: vec![],
            complete: false,
        };
        assert_eq!(cauchy_check(&report, 1.0), Err(AdmError::IncompleteReport));
    }
}
