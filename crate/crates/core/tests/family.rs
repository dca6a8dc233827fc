use std::f64::consts::PI;

use admlab_core::convergence::{
    cauchy_check, run_family, FamilyPlan, InverseLinear, RuleParams, RuleRegistry,
};
use admlab_core::spectral::leray_project;
use admlab_core::{SpectralScalarField, SpectralVectorField, StepControl, TorusGrid};
use num_complex::Complex64;
use std::sync::Arc;

fn data(grid: &TorusGrid) -> (SpectralVectorField, SpectralScalarField) {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let u = SpectralVectorField::from_components([
        SpectralScalarField::from_modes(grid, &[([0, 1, 1], c(0.4, 0.1)), ([1, 1, 0], c(0.0, 0.3))]),
        SpectralScalarField::from_modes(grid, &[([1, 0, 1], c(-0.2, 0.2)), ([0, 0, 2], c(0.3, 0.0))]),
        SpectralScalarField::from_modes(grid, &[([1, 1, 0], c(0.1, -0.3)), ([2, 0, 0], c(0.0, 0.2))]),
    ])
    .unwrap();
    let theta = SpectralScalarField::from_modes(grid, &[([1, 0, 1], c(0.3, 0.0)), ([0, 2, 0], c(0.1, 0.1))]);
    (leray_project(&u), theta)
}

fn plan(orders: Vec<usize>, eps0: f64) -> FamilyPlan {
    let grid = TorusGrid::new(2.0 * PI, 8).unwrap();
    let (u, theta) = data(&grid);
    let rule = RuleRegistry::default()
        .build("inverse-linear", &RuleParams { eps0, exponent: None })
        .unwrap();
    FamilyPlan::new(1.0, 0.1, orders, rule, u, theta, StepControl::new(0.01, 0.3).with_cadence(2))
}

#[test]
fn differences_decrease_and_epsilon_coupling_is_minor() {
    let report = run_family(&plan(vec![1, 2, 4, 8, 16], 0.5)).unwrap();
    assert!(report.complete);
    let summary = cauchy_check(&report, 1e-2).unwrap();
    assert!(summary.passed, "{}", summary.summary);
    for (m, r) in report.members.iter().zip(&report.limit_residuals) {
        let m = m.as_ref().unwrap();
        assert!(r.momentum_l2 >= 0.0 && r.density_l2 >= 0.0);
        assert_eq!(m.records.len(), m.samples.len());
    }
    assert!(report.pair_differences.iter().all(|d| d.w_h1_l2 >= 0.0 && d.rho_l2_l2 >= 0.0));

    // rerun the N = 1 member with ε halved
    let mut halved = plan(vec![1, 16], 0.5);
    halved.rule = Arc::new(InverseLinear { eps0: 0.25 });
    halved.allow_degenerate = true;
    let rerun = run_family(&halved).unwrap();
    let original = report.members[0].as_ref().unwrap().rho_l2_l2;
    let changed = rerun.members[0].as_ref().unwrap().rho_l2_l2;
    let n_difference = report.pair_differences[0].rho_l2_l2;
    assert!(
        (original - changed).abs() < n_difference,
        "ε sensitivity {} vs N difference {}",
        (original - changed).abs(),
        n_difference
    );
}

#[test]
fn failing_member_flags_report_incomplete() {
    let mut p = plan(vec![1, 2, 4], 0.5);
    p.control = StepControl::new(50.0, 100.0);
    let err = run_family(&p).unwrap_err();
    assert!(!err.report.complete);
    assert_eq!(err.failures.len(), 3);
    assert!(cauchy_check(&err.report, 1.0).is_err());
}
